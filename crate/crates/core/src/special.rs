//! Thin wrappers over `statrs` special functions plus the truncated gamma
//! integral used by the slash generator.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::{beta, erf, gamma};

pub use statrs::function::gamma::ln_gamma;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal quantile, polished with one Newton step.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    let d = normal_pdf(x);
    if d > 0.0 && x.is_finite() {
        // Work in the smaller tail so the residual keeps relative accuracy.
        let r = if x < 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_cdf(-x)
        };
        x - r / d
    } else {
        x
    }
}

/// Student-t CDF with `nu` degrees of freedom.
pub fn student_t_cdf(t: f64, nu: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = nu / (nu + t * t);
    let tail = 0.5 * beta::beta_reg(0.5 * nu, 0.5, x);
    if t < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma::gamma_ur(0.5 * df as f64, 0.5 * x)
}

/// Critical value `C_{df, 1 - alpha}`; zero when `alpha >= 1`.
pub fn chi_square_critical(alpha: f64, df: usize) -> f64 {
    if alpha >= 1.0 {
        return 0.0;
    }
    if alpha <= 0.0 {
        return f64::INFINITY;
    }
    ChiSquared::new(df as f64).expect("df >= 1").inverse_cdf(1.0 - alpha)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma::gamma_ur(a, x)
}

/// `ln ∫₀¹ t^(a-1) e^(-x t) dt` for `a > 0`, `x >= 0`.
///
/// Uses the positive-term series `e^-x Σ x^k / (a)_(k+1)` for moderate `x`
/// and `Γ(a) P(a, x) / x^a` beyond.
pub fn ln_truncated_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x <= 50.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= x / (a + k);
            sum += term;
            if term < sum * 1e-17 || k > 2000.0 {
                break;
            }
        }
        sum.ln() - x
    } else {
        let q = gamma::gamma_ur(a, x);
        ln_gamma(a) + (-q).ln_1p() - a * x.ln()
    }
}

/// `ln cosh(x)` without overflow.
pub(crate) fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln(c + 4 sinh²(x))` for `c > 0`, stable for large `|x|`.
pub(crate) fn ln_c_plus_4sinh2(c: f64, x: f64) -> f64 {
    let a = x.abs();
    if a < 20.0 {
        let s = a.sinh();
        (c + 4.0 * s * s).ln()
    } else {
        // 4 sinh² a = e^{2a} (1 - e^{-2a})²
        let e = (-2.0 * a).exp();
        let ln4s2 = 2.0 * a + 2.0 * (-e).ln_1p();
        ln4s2 + (c * (-ln4s2).exp()).ln_1p()
    }
}
