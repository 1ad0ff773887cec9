//! Density generators `g(u)` and the standard symmetric law `S(0, 1, g)`
//! they induce on the log scale.
//!
//! Every generator is evaluated in log space (`ln g`) together with its
//! analytic log-derivative, so the score weight `v(z) = -2 g'(z²) / g(z²)`
//! stays finite far into the tails where `g` itself underflows.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::special::{self, LN_SQRT_2PI};

/// Family tags as spelled on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FamilyTag {
    #[serde(rename = "log-no")]
    LogNo,
    #[serde(rename = "log-t")]
    LogT,
    #[serde(rename = "log-pe")]
    LogPe,
    #[serde(rename = "log-hp")]
    LogHp,
    #[serde(rename = "log-sl")]
    LogSl,
    #[serde(rename = "log-cn")]
    LogCn,
    #[serde(rename = "ebs")]
    Ebs,
    #[serde(rename = "ebs-t")]
    EbsT,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 8] = [
        FamilyTag::LogNo,
        FamilyTag::LogT,
        FamilyTag::LogPe,
        FamilyTag::LogHp,
        FamilyTag::LogSl,
        FamilyTag::LogCn,
        FamilyTag::Ebs,
        FamilyTag::EbsT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::LogNo => "log-no",
            FamilyTag::LogT => "log-t",
            FamilyTag::LogPe => "log-pe",
            FamilyTag::LogHp => "log-hp",
            FamilyTag::LogSl => "log-sl",
            FamilyTag::LogCn => "log-cn",
            FamilyTag::Ebs => "ebs",
            FamilyTag::EbsT => "ebs-t",
        }
    }

    /// Number of extra parameters the family takes.
    pub fn extra_len(self) -> usize {
        match self {
            FamilyTag::LogNo => 0,
            FamilyTag::LogCn | FamilyTag::EbsT => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown family `{s}`")))
    }
}

/// A generator family together with its extra parameter(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelFamily {
    LogNo,
    /// Student-t with `nu` degrees of freedom.
    LogT {
        nu: f64,
    },
    /// Power exponential, `-1 < shape <= 1`.
    LogPe {
        shape: f64,
    },
    LogHp {
        alpha: f64,
    },
    LogSl {
        nu: f64,
    },
    /// Contaminated normal: mixing weight and precision of the wide component.
    LogCn {
        weight: f64,
        precision: f64,
    },
    Ebs {
        alpha: f64,
    },
    EbsT {
        alpha: f64,
        nu: f64,
    },
}

impl KernelFamily {
    pub fn new(tag: FamilyTag, extra: &[f64]) -> Result<Self> {
        if extra.len() != tag.extra_len() {
            return Err(Error::InvalidExtraParameter {
                family: tag.name(),
                reason: format!("expected {} extra parameter(s), got {}", tag.extra_len(), extra.len()),
            });
        }
        let fam = match tag {
            FamilyTag::LogNo => KernelFamily::LogNo,
            FamilyTag::LogT => KernelFamily::LogT { nu: extra[0] },
            FamilyTag::LogPe => KernelFamily::LogPe { shape: extra[0] },
            FamilyTag::LogHp => KernelFamily::LogHp { alpha: extra[0] },
            FamilyTag::LogSl => KernelFamily::LogSl { nu: extra[0] },
            FamilyTag::LogCn => KernelFamily::LogCn {
                weight: extra[0],
                precision: extra[1],
            },
            FamilyTag::Ebs => KernelFamily::Ebs { alpha: extra[0] },
            FamilyTag::EbsT => KernelFamily::EbsT {
                alpha: extra[0],
                nu: extra[1],
            },
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            KernelFamily::LogNo => FamilyTag::LogNo,
            KernelFamily::LogT { .. } => FamilyTag::LogT,
            KernelFamily::LogPe { .. } => FamilyTag::LogPe,
            KernelFamily::LogHp { .. } => FamilyTag::LogHp,
            KernelFamily::LogSl { .. } => FamilyTag::LogSl,
            KernelFamily::LogCn { .. } => FamilyTag::LogCn,
            KernelFamily::Ebs { .. } => FamilyTag::Ebs,
            KernelFamily::EbsT { .. } => FamilyTag::EbsT,
        }
    }

    pub fn extra(&self) -> Vec<f64> {
        match *self {
            KernelFamily::LogNo => vec![],
            KernelFamily::LogT { nu } | KernelFamily::LogSl { nu } => vec![nu],
            KernelFamily::LogPe { shape } => vec![shape],
            KernelFamily::LogHp { alpha } | KernelFamily::Ebs { alpha } => vec![alpha],
            KernelFamily::LogCn { weight, precision } => vec![weight, precision],
            KernelFamily::EbsT { alpha, nu } => vec![alpha, nu],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidExtraParameter {
            family: self.tag().name(),
            reason: reason.to_string(),
        };
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            KernelFamily::LogNo => Ok(()),
            KernelFamily::LogT { nu } | KernelFamily::LogSl { nu } if !positive(nu) => Err(bad("requires ϑ > 0")),
            KernelFamily::LogHp { alpha } | KernelFamily::Ebs { alpha } if !positive(alpha) => {
                Err(bad("requires ϑ > 0"))
            }
            KernelFamily::LogPe { shape } if !(shape > -1.0 && shape <= 1.0) => Err(bad("requires -1 < ϑ <= 1")),
            KernelFamily::LogCn { weight, precision }
                if !(weight > 0.0 && weight < 1.0 && precision > 0.0 && precision < 1.0) =>
            {
                Err(bad("requires 0 < ϑ₁ < 1 and 0 < ϑ₂ < 1"))
            }
            KernelFamily::EbsT { alpha, nu } if !(positive(alpha) && positive(nu)) => {
                Err(bad("requires ϑ₁ > 0 and ϑ₂ > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Extra-parameter grid profiled when the caller supplies none.
    pub fn default_grid(tag: FamilyTag) -> Vec<KernelFamily> {
        let ints = || (1..=10).map(f64::from);
        let ebs = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
        match tag {
            FamilyTag::LogNo => vec![KernelFamily::LogNo],
            FamilyTag::LogT => ints().map(|nu| KernelFamily::LogT { nu }).collect(),
            FamilyTag::LogPe => (-9..=10)
                .map(|i| KernelFamily::LogPe { shape: i as f64 / 10.0 })
                .collect(),
            FamilyTag::LogHp => (1..=10)
                .map(|i| KernelFamily::LogHp { alpha: i as f64 * 0.5 })
                .collect(),
            FamilyTag::LogSl => ints().map(|nu| KernelFamily::LogSl { nu }).collect(),
            FamilyTag::LogCn => (1..=9)
                .flat_map(|i| {
                    (1..=9).map(move |j| KernelFamily::LogCn {
                        weight: i as f64 / 10.0,
                        precision: j as f64 / 10.0,
                    })
                })
                .collect(),
            FamilyTag::Ebs => ebs.iter().map(|&alpha| KernelFamily::Ebs { alpha }).collect(),
            FamilyTag::EbsT => ebs
                .iter()
                .flat_map(|&alpha| ints().map(move |nu| KernelFamily::EbsT { alpha, nu }))
                .collect(),
        }
    }

    /// Extra-parameter values used by the simulation studies.
    pub fn study_default(tag: FamilyTag) -> KernelFamily {
        match tag {
            FamilyTag::LogNo => KernelFamily::LogNo,
            FamilyTag::LogT => KernelFamily::LogT { nu: 3.0 },
            FamilyTag::LogPe => KernelFamily::LogPe { shape: 0.3 },
            FamilyTag::LogHp => KernelFamily::LogHp { alpha: 2.0 },
            FamilyTag::LogSl => KernelFamily::LogSl { nu: 4.0 },
            FamilyTag::LogCn => KernelFamily::LogCn {
                weight: 0.1,
                precision: 0.2,
            },
            FamilyTag::Ebs => KernelFamily::Ebs { alpha: 0.5 },
            FamilyTag::EbsT => KernelFamily::EbsT { alpha: 0.5, nu: 3.0 },
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let extra = self.extra();
        if extra.is_empty() {
            write!(f, "{}", self.tag())
        } else {
            let parts: Vec<String> = extra.iter().map(|x| format!("{x}")).collect();
            write!(f, "{}({})", self.tag(), parts.join(","))
        }
    }
}

/// Expected-information weights `d_g = E[v²Z²]` and `f_g = E[(vZ(Z - z_q) - 1)²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherWeights {
    pub d: f64,
    pub f: f64,
}

const CDF_TOL: Tolerance = Tolerance {
    abs: 1e-15,
    rel: 1e-12,
    max_intervals: 400,
};

const MOMENT_TOL: Tolerance = Tolerance {
    abs: 1e-12,
    rel: 1e-10,
    max_intervals: 500,
};

/// A validated generator with its normalizing constant bound in.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityKernel {
    family: KernelFamily,
    ln_xi: f64,
}

impl DensityKernel {
    pub fn new(family: KernelFamily) -> Result<Self> {
        family.validate()?;
        let ln_xi = match family {
            KernelFamily::LogNo => -LN_SQRT_2PI,
            KernelFamily::LogT { nu } => ln_student_t_const(nu),
            KernelFamily::LogPe { shape } => {
                let a = 0.5 * (1.0 + shape);
                -((1.0 + shape).ln() + a * std::f64::consts::LN_2 + special::ln_gamma(a))
            }
            KernelFamily::LogHp { alpha } => {
                // ∫ exp(-α√(1+z²)) dz = e^{-α} ∫ exp(-α z² / (√(1+z²) + 1)) dz
                let half = quadrature::integrate_upper(
                    |z| (-alpha * z * z / ((1.0 + z * z).sqrt() + 1.0)).exp(),
                    0.0,
                    Tolerance::new(1e-15, 1e-13),
                )
                .map_err(|_| Error::NonIntegrableKernel { family: "log-hp" })?;
                alpha - (2.0 * half.value).ln()
            }
            KernelFamily::LogSl { nu } => nu.ln() - LN_SQRT_2PI,
            KernelFamily::LogCn { weight, .. } => weight.ln() - LN_SQRT_2PI,
            KernelFamily::Ebs { alpha } => (2.0 / alpha).ln() - LN_SQRT_2PI,
            KernelFamily::EbsT { alpha, nu } => {
                (2.0 / alpha).ln() + ln_student_t_const(nu) + 0.5 * (nu + 1.0) * (nu * alpha * alpha).ln()
            }
        };
        if !ln_xi.is_finite() {
            return Err(Error::NonIntegrableKernel {
                family: family.tag().name(),
            });
        }
        Ok(Self { family, ln_xi })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn xi(&self) -> f64 {
        self.ln_xi.exp()
    }

    pub fn ln_xi(&self) -> f64 {
        self.ln_xi
    }

    /// `g(u)` for `u >= 0`.
    pub fn g(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::DomainError(format!("g(u) requires u >= 0, got {u}")));
        }
        Ok(self.ln_g(u).exp())
    }

    /// `g'(u)` for `u >= 0` (analytic for every family).
    pub fn g_prime(&self, u: f64) -> Result<f64> {
        Ok(self.g(u)? * self.dln_g(u))
    }

    /// `ln g(u)`; `u` is assumed nonnegative.
    pub fn ln_g(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::LogNo => -0.5 * u,
            KernelFamily::LogT { nu } => -0.5 * (nu + 1.0) * (u / nu).ln_1p(),
            KernelFamily::LogPe { shape } => -0.5 * u.powf(1.0 / (1.0 + shape)),
            KernelFamily::LogHp { alpha } => -alpha * (1.0 + u).sqrt(),
            KernelFamily::LogSl { nu } => special::ln_truncated_gamma(nu + 0.5, 0.5 * u),
            KernelFamily::LogCn { weight, precision } => {
                let (a, b) = cn_log_terms(weight, precision, u);
                log_add(a, b)
            }
            KernelFamily::Ebs { alpha } => {
                let s = u.sqrt();
                let sh = s.sinh();
                special::ln_cosh(s) - 2.0 * sh * sh / (alpha * alpha)
            }
            KernelFamily::EbsT { alpha, nu } => {
                let s = u.sqrt();
                special::ln_cosh(s) - 0.5 * (nu + 1.0) * special::ln_c_plus_4sinh2(nu * alpha * alpha, s)
            }
        }
    }

    /// `d ln g / du`.
    fn dln_g(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::LogNo => -0.5,
            KernelFamily::LogT { nu } => -0.5 * (nu + 1.0) / (nu + u),
            KernelFamily::LogPe { shape } => {
                let k = 1.0 / (1.0 + shape);
                if u == 0.0 {
                    if k > 1.0 {
                        0.0
                    } else if k == 1.0 {
                        -0.5
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    -0.5 * k * u.powf(k - 1.0)
                }
            }
            KernelFamily::LogHp { alpha } => -0.5 * alpha / (1.0 + u).sqrt(),
            KernelFamily::LogSl { nu } => -0.5 * slash_ratio(nu, u),
            KernelFamily::LogCn { weight, precision } => -0.5 * cn_mean_precision(weight, precision, u),
            KernelFamily::Ebs { alpha } => {
                let s = u.sqrt();
                let c = 4.0 / (alpha * alpha);
                if s < 1e-4 {
                    0.5 * (1.0 - s * s / 3.0) - 0.5 * c * (1.0 + 2.0 * s * s / 3.0)
                } else {
                    (s.tanh() - 0.5 * c * (2.0 * s).sinh()) / (2.0 * s)
                }
            }
            KernelFamily::EbsT { alpha, nu } => {
                let s = u.sqrt();
                let c = nu * alpha * alpha;
                if s < 1e-4 {
                    0.5 * (1.0 - s * s / 3.0) - 2.0 * (nu + 1.0) / c
                } else {
                    (s.tanh() - 4.0 * (nu + 1.0) * ebst_ratio(c, s)) / (2.0 * s)
                }
            }
        }
    }

    /// Weight `v(z) = -2 g'(z²) / g(z²)`.
    pub fn v_weight(&self, z: f64) -> Result<f64> {
        let v = -2.0 * self.dln_g(z * z);
        if !v.is_finite() || !self.ln_g(z * z).is_finite() {
            return Err(Error::SingularWeight { z });
        }
        Ok(v)
    }

    /// `v(z) · z`, finite for every real `z` (including the PE cusp at 0).
    pub fn v_times_z(&self, z: f64) -> f64 {
        match self.family {
            KernelFamily::LogNo => z,
            KernelFamily::LogT { nu } => (nu + 1.0) * z / (nu + z * z),
            KernelFamily::LogPe { shape } => {
                let k = 1.0 / (1.0 + shape);
                if z == 0.0 {
                    0.0
                } else {
                    k * z.signum() * z.abs().powf(2.0 * k - 1.0)
                }
            }
            KernelFamily::LogHp { alpha } => alpha * z / (1.0 + z * z).sqrt(),
            KernelFamily::LogSl { nu } => z * slash_ratio(nu, z * z),
            KernelFamily::LogCn { weight, precision } => z * cn_mean_precision(weight, precision, z * z),
            KernelFamily::Ebs { alpha } => 2.0 * (2.0 * z).sinh() / (alpha * alpha) - z.tanh(),
            KernelFamily::EbsT { alpha, nu } => {
                let c = nu * alpha * alpha;
                4.0 * (nu + 1.0) * z.signum() * ebst_ratio(c, z.abs()) - z.tanh()
            }
        }
    }

    /// Density `ξ g(z²)` of `S(0, 1, g)`.
    pub fn pdf(&self, z: f64) -> f64 {
        (self.ln_xi + self.ln_g(z * z)).exp()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        self.ln_xi + self.ln_g(z * z)
    }

    /// `G(w)` for `w <= 0`.
    fn lower_tail(&self, w: f64) -> f64 {
        debug_assert!(w <= 0.0);
        if w == f64::NEG_INFINITY {
            return 0.0;
        }
        match self.family {
            KernelFamily::LogNo => special::normal_cdf(w),
            KernelFamily::LogT { nu } => special::student_t_cdf(w, nu),
            KernelFamily::LogPe { shape } => {
                let a = 0.5 * (1.0 + shape);
                0.5 * special::gamma_q(a, 0.5 * (-w).powf(1.0 / a))
            }
            KernelFamily::LogCn { weight, precision } => {
                weight * special::normal_cdf(precision.sqrt() * w) + (1.0 - weight) * special::normal_cdf(w)
            }
            KernelFamily::Ebs { alpha } => special::normal_cdf(2.0 * w.sinh() / alpha),
            KernelFamily::EbsT { alpha, nu } => special::student_t_cdf(2.0 * w.sinh() / alpha, nu),
            KernelFamily::LogHp { .. } | KernelFamily::LogSl { .. } => {
                let ln_xi = self.ln_xi;
                match quadrature::integrate_upper(|z| (ln_xi + self.ln_g(z * z)).exp(), -w, CDF_TOL) {
                    Ok(e) => e.value.clamp(0.0, 0.5),
                    // only reachable if the interval budget runs out
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// Symmetric CDF `G(w) = ξ ∫_{-∞}^{w} g(z²) dz`.
    pub fn cdf(&self, w: f64) -> f64 {
        if w.is_nan() {
            return f64::NAN;
        }
        if w <= 0.0 {
            self.lower_tail(w)
        } else {
            1.0 - self.lower_tail(-w)
        }
    }

    /// Survival function `1 - G(w)`, accurate in the upper tail.
    pub fn sf(&self, w: f64) -> f64 {
        self.cdf(-w)
    }

    /// Quantile `z_q = G⁻¹(q)`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::QuantileOutOfRange(q));
        }
        if q == 0.5 {
            return Ok(0.0);
        }
        if q < 0.5 {
            Ok(self.lower_quantile(q))
        } else {
            Ok(-self.lower_quantile(1.0 - q))
        }
    }

    /// Solve `G(w) = p` for `p < 1/2` (so `w < 0`).
    fn lower_quantile(&self, p: f64) -> f64 {
        // bracket: G(lo) <= p < G(hi)
        let mut hi = 0.0;
        let mut lo = -1.0;
        while self.lower_tail(lo) > p {
            hi = lo;
            lo *= 2.0;
            if lo < -1e300 {
                return lo;
            }
        }
        let mut w = 0.5 * (lo + hi);
        for _ in 0..300 {
            let r = self.lower_tail(w) - p;
            if r.abs() <= 1e-15 * p {
                break;
            }
            if r > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let d = self.pdf(w);
            let newton = w - r / d;
            w = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo).abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        w
    }

    /// One draw from `S(0, 1, g)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            KernelFamily::LogNo => rng.sample(StandardNormal),
            KernelFamily::LogT { nu } => StudentT::new(nu).expect("validated").sample(rng),
            KernelFamily::LogPe { .. } | KernelFamily::LogHp { .. } => {
                let u = open_unit(rng);
                self.quantile(u).expect("u in (0, 1)")
            }
            KernelFamily::LogSl { nu } => {
                let n: f64 = rng.sample(StandardNormal);
                let u = 1.0 - rng.random::<f64>();
                n * u.powf(-0.5 / nu)
            }
            KernelFamily::LogCn { weight, precision } => {
                let n: f64 = rng.sample(StandardNormal);
                if rng.random::<f64>() < weight {
                    n / precision.sqrt()
                } else {
                    n
                }
            }
            KernelFamily::Ebs { alpha } => {
                let n: f64 = rng.sample(StandardNormal);
                (0.5 * alpha * n).asinh()
            }
            KernelFamily::EbsT { alpha, nu } => {
                let t = StudentT::new(nu).expect("validated").sample(rng);
                (0.5 * alpha * t).asinh()
            }
        }
    }

    /// `n` i.i.d. draws from `S(0, 1, g)`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// Inverse-CDF draw, available for every family.
    pub fn draw_inverse_cdf<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open_unit(rng)).expect("u in (0, 1)")
    }

    /// Expectation of `h(Z)` under `S(0, 1, g)` by adaptive quadrature.
    pub fn expectation<F: Fn(f64) -> f64>(&self, h: F) -> Result<f64> {
        let est = quadrature::integrate_real_line(
            |z| {
                let d = self.pdf(z);
                if d == 0.0 {
                    0.0
                } else {
                    d * h(z)
                }
            },
            0.0,
            MOMENT_TOL,
        )?;
        Ok(est.value)
    }

    /// Fisher-weight expectations at quantile level `q`.
    pub fn fisher_weights(&self, q: f64) -> Result<FisherWeights> {
        let zq = self.quantile(q)?;
        let d = self.expectation(|z| {
            let p = self.v_times_z(z);
            p * p
        })?;
        let f = self.expectation(|z| {
            let t = self.v_times_z(z) * (z - zq) - 1.0;
            t * t
        })?;
        Ok(FisherWeights { d, f })
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            return u;
        }
    }
}

fn ln_student_t_const(nu: f64) -> f64 {
    special::ln_gamma(0.5 * (nu + 1.0)) - special::ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn cn_log_terms(weight: f64, precision: f64, u: f64) -> (f64, f64) {
    let a = 0.5 * precision.ln() - 0.5 * precision * u;
    let b = ((1.0 - weight) / weight).ln() - 0.5 * u;
    (a, b)
}

/// Posterior-weighted precision `-2 d ln g / du` of the normal mixture.
fn cn_mean_precision(weight: f64, precision: f64, u: f64) -> f64 {
    let (a, b) = cn_log_terms(weight, precision, u);
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    (ea * precision + eb) / (ea + eb)
}

/// `h_{a+1}(u/2) / h_a(u/2)`, `a = ν + 1/2`.
fn slash_ratio(nu: f64, u: f64) -> f64 {
    let a = nu + 0.5;
    let x = 0.5 * u;
    (special::ln_truncated_gamma(a + 1.0, x) - special::ln_truncated_gamma(a, x)).exp()
}

/// `sinh(s) cosh(s) / (c + 4 sinh²(s))` for `s >= 0`.
fn ebst_ratio(c: f64, s: f64) -> f64 {
    if s < 20.0 {
        let sh = s.sinh();
        sh * s.cosh() / (c + 4.0 * sh * sh)
    } else {
        let e = (-2.0 * s).exp();
        // sinh·cosh / (4 sinh²) = coth(s) / 4
        let coth = (1.0 + e) / (1.0 - e);
        let sh2 = 0.25 * (1.0 / e) * (1.0 - e) * (1.0 - e);
        0.25 * coth / (1.0 + c / (4.0 * sh2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kernel(tag: FamilyTag, extra: &[f64]) -> DensityKernel {
        DensityKernel::new(KernelFamily::new(tag, extra).unwrap()).unwrap()
    }

    #[test]
    fn normalizing_constants_from_examples() {
        assert_relative_eq!(
            kernel(FamilyTag::LogNo, &[]).xi(),
            0.398_942_280_401_432_7,
            max_relative = 1e-14
        );
        // Γ(2) / (Γ(3/2) √(3π))
        let t3 = 1.0 / (0.886_226_925_452_758 * (3.0 * PI).sqrt());
        assert_relative_eq!(kernel(FamilyTag::LogT, &[3.0]).xi(), t3, max_relative = 1e-13);
        assert!((t3 - 0.367553).abs() < 1e-6);
    }

    #[test]
    fn invalid_extra_parameters_are_rejected() {
        for (tag, extra) in [
            (FamilyTag::LogCn, vec![2.0, 0.5]),
            (FamilyTag::LogCn, vec![0.5, 1.0]),
            (FamilyTag::LogT, vec![0.0]),
            (FamilyTag::LogPe, vec![-1.0]),
            (FamilyTag::LogPe, vec![1.01]),
            (FamilyTag::LogHp, vec![-2.0]),
            (FamilyTag::EbsT, vec![0.5, f64::NAN]),
            (FamilyTag::LogNo, vec![1.0]),
        ] {
            assert!(
                matches!(KernelFamily::new(tag, &extra), Err(Error::InvalidExtraParameter { .. })),
                "{tag} {extra:?}"
            );
        }
        assert!(KernelFamily::new(FamilyTag::LogPe, &[1.0]).is_ok());
    }

    #[test]
    fn g_values_from_examples() {
        assert_relative_eq!(
            kernel(FamilyTag::LogNo, &[]).g(2.0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            kernel(FamilyTag::LogT, &[3.0]).g(3.0).unwrap(),
            0.25,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            kernel(FamilyTag::LogHp, &[2.0]).g(0.0).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(matches!(
            kernel(FamilyTag::LogNo, &[]).g(-1.0),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn slash_generator_matches_truncated_integral() {
        // ∫₀¹ e^{-(u/2)t} t^{ϑ-1/2} dt by direct quadrature
        let k = kernel(FamilyTag::LogSl, &[4.0]);
        for &u in &[0.0, 0.3, 2.0, 9.0, 40.0, 150.0] {
            let direct = quadrature::integrate(
                |t: f64| (-(0.5 * u) * t).exp() * t.powf(3.5),
                0.0,
                1.0,
                Tolerance::default(),
            )
            .unwrap()
            .value;
            assert_relative_eq!(k.g(u).unwrap(), direct, max_relative = 1e-11);
        }
    }

    #[test]
    fn v_weight_examples() {
        assert_eq!(kernel(FamilyTag::LogNo, &[]).v_weight(3.7).unwrap(), 1.0);
        assert_relative_eq!(
            kernel(FamilyTag::LogT, &[3.0]).v_weight(1.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            kernel(FamilyTag::LogPe, &[0.0]).v_weight(2.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(matches!(
            kernel(FamilyTag::LogPe, &[0.5]).v_weight(0.0),
            Err(Error::SingularWeight { .. })
        ));
    }

    #[test]
    fn cdf_and_quantile_examples() {
        let no = kernel(FamilyTag::LogNo, &[]);
        let t3 = kernel(FamilyTag::LogT, &[3.0]);
        assert_eq!(no.cdf(0.0), 0.5);
        assert_eq!(t3.cdf(0.0), 0.5);
        assert_relative_eq!(no.cdf(1.959964), 0.975, epsilon = 1e-7);
        assert_eq!(t3.cdf(f64::INFINITY), 1.0);
        assert_eq!(no.quantile(0.5).unwrap(), 0.0);
        assert_relative_eq!(no.quantile(0.975).unwrap(), 1.959_963_984_540_054, epsilon = 1e-9);
        assert_relative_eq!(t3.quantile(0.975).unwrap(), 3.182_446_305_284_263, epsilon = 1e-9);
        assert!(matches!(no.quantile(1.0), Err(Error::QuantileOutOfRange(_))));
        assert!(matches!(no.quantile(0.0), Err(Error::QuantileOutOfRange(_))));
    }

    #[test]
    fn fisher_weight_examples() {
        let no = kernel(FamilyTag::LogNo, &[]);
        let w = no.fisher_weights(0.5).unwrap();
        assert_relative_eq!(w.d, 1.0, max_relative = 1e-9);
        assert_relative_eq!(w.f, 2.0, max_relative = 1e-9);
        let z = no.quantile(0.25).unwrap();
        assert_relative_eq!(no.fisher_weights(0.25).unwrap().f, 2.0 + z * z, max_relative = 1e-9);
        let pe0 = kernel(FamilyTag::LogPe, &[0.0]).fisher_weights(0.5).unwrap();
        assert_relative_eq!(pe0.d, w.d, max_relative = 1e-9);
        assert_relative_eq!(pe0.f, w.f, max_relative = 1e-9);
        // Student-t location/scale information
        let t = kernel(FamilyTag::LogT, &[3.0]).fisher_weights(0.5).unwrap();
        assert_relative_eq!(t.d, 4.0 / 6.0, max_relative = 1e-9);
        assert_relative_eq!(t.f, 6.0 / 6.0, max_relative = 1e-9);
    }

    #[test]
    fn samplers_are_reproducible() {
        let k = kernel(FamilyTag::EbsT, &[0.5, 3.0]);
        let a = k.sample(50, &mut ChaCha8Rng::seed_from_u64(3));
        let b = k.sample(50, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn family_tags_parse() {
        for tag in FamilyTag::ALL {
            assert_eq!(tag.name().parse::<FamilyTag>().unwrap(), tag);
        }
        assert!("log-xx".parse::<FamilyTag>().is_err());
        assert_eq!(
            KernelFamily::LogCn {
                weight: 0.1,
                precision: 0.2
            }
            .to_string(),
            "log-cn(0.1,0.2)"
        );
    }
}
