#![allow(dead_code)]

use std::sync::Arc;

use logsym::kernels::{DensityKernel, FamilyTag, KernelFamily};
use logsym::regress::{ParamVector, RegressionModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kernel(f: KernelFamily) -> Arc<DensityKernel> {
    Arc::new(DensityKernel::new(f).unwrap())
}

pub fn study_families() -> Vec<KernelFamily> {
    FamilyTag::ALL.into_iter().map(KernelFamily::study_default).collect()
}

/// Study defaults plus a spread of other extra-parameter values.
pub fn varied_families() -> Vec<KernelFamily> {
    use KernelFamily::*;
    let mut v = study_families();
    v.extend([
        LogT { nu: 1.0 },
        LogT { nu: 10.0 },
        LogPe { shape: -0.5 },
        LogPe { shape: 0.0 },
        LogPe { shape: 0.9 },
        LogHp { alpha: 0.5 },
        LogHp { alpha: 5.0 },
        LogSl { nu: 1.0 },
        LogCn {
            weight: 0.3,
            precision: 0.5,
        },
        Ebs { alpha: 0.1 },
        Ebs { alpha: 2.0 },
        EbsT { alpha: 1.0, nu: 1.0 },
    ]);
    v
}

/// Intercept column followed by `cols - 1` uniform(0, 1) covariates.
pub fn uniform_design<R: Rng>(rng: &mut R, n: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() })
}

/// Normal-equation least squares and the mean squared residual.
pub fn ols(ln_y: &DVector<f64>, x: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * ln_y;
    let beta = xtx.lu().solve(&xty).unwrap();
    let r = ln_y - x * &beta;
    let mse = r.norm_squared() / x.nrows() as f64;
    (beta, mse)
}

/// Richardson-extrapolated central difference gradient.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>) -> DVector<f64> {
    let d = |i: usize, h: f64| {
        let mut up = x.clone();
        let mut dn = x.clone();
        up[i] += h;
        dn[i] -= h;
        (f(&up) - f(&dn)) / (up[i] - dn[i])
    };
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            // small steps: the power-exponential kernel is not smooth at z = 0
            let h = 1e-5 * (1.0 + x[i].abs());
            (4.0 * d(i, 0.5 * h) - d(i, h)) / 3.0
        }),
    )
}

/// Jacobian of a vector function by the same rule, columns per coordinate.
pub fn fd_jacobian<F: Fn(&DVector<f64>) -> DVector<f64>>(f: F, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, n);
    for i in 0..n {
        let d = |h: f64| {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (up[i] - dn[i])
        };
        let h = 1e-3 * (1.0 + x[i].abs());
        j.set_column(i, &((4.0 * d(0.5 * h) - d(h)) / 3.0));
    }
    j
}

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫ f` over ℝ through `z = sinh(s)³`; the cube smooths kinks at the origin.
pub fn real_line<F: Fn(f64) -> f64>(f: F, l: f64, m: usize) -> f64 {
    simpson(
        |s| {
            let sh = s.sinh();
            f(sh * sh * sh) * 3.0 * sh * sh * s.cosh()
        },
        -l,
        l,
        m,
    )
}

/// A model with random design and its data drawn from `theta`.
pub fn simulated_model(
    family: KernelFamily,
    q: f64,
    n: usize,
    kx: usize,
    kw: usize,
    theta: &ParamVector,
    seed: u64,
) -> RegressionModel {
    let mut r = rng(seed);
    let x = uniform_design(&mut r, n, kx);
    let w = uniform_design(&mut r, n, kw);
    let k = kernel(family);
    let z_q = k.quantile(q).unwrap();
    let y = logsym::regress::simulate_response(&x, &w, theta, z_q, &k, &mut r).unwrap();
    RegressionModel::new(&y, x, w, q, k).unwrap()
}

/// χ² CDF by direct integration of the density.
pub fn chi2_cdf_oracle(x: f64, df: usize) -> f64 {
    let k = df as f64 / 2.0;
    let c = -k * 2f64.ln() - ln_gamma_half(df);
    // t = u² removes the endpoint singularity at df = 1
    simpson(
        |u| 2.0 * u.powf(2.0 * k - 1.0) * (c - 0.5 * u * u).exp(),
        0.0,
        x.sqrt(),
        4000,
    )
}

/// `ln Γ(df / 2)` by the recurrence from Γ(1/2) or Γ(1).
fn ln_gamma_half(df: usize) -> f64 {
    let mut v = if df.is_multiple_of(2) {
        0.0
    } else {
        0.5 * std::f64::consts::PI.ln()
    };
    let mut a = if df.is_multiple_of(2) { 1.0 } else { 0.5 };
    while a < df as f64 / 2.0 - 1e-12 {
        v += a.ln();
        a += 1.0;
    }
    v
}

/// Largest `|β̂ − β_OLS|` and `|φ̂ − mse|` over `designs` homoscedastic
/// log-normal median fits with `n` rows.
pub fn ols_oracle_errors(designs: usize, n: usize, seed: u64) -> (f64, f64) {
    use logsym::regress::FitOptions;
    let mut worst = (0.0f64, 0.0f64);
    for d in 0..designs {
        let mut r = rng(seed + d as u64);
        let k = 2 + d % 3;
        let x = uniform_design(&mut r, n, k);
        let w = DMatrix::from_element(n, 1, 1.0);
        let beta: Vec<f64> = (0..k).map(|_| r.random_range(-2.0..2.0)).collect();
        let tau = vec![r.random_range(-2.0..1.0)];
        let theta = ParamVector::new(beta, tau);
        let fam = KernelFamily::LogNo;
        let y = logsym::regress::simulate_response(&x, &w, &theta, 0.0, &kernel(fam), &mut r).unwrap();
        let model = RegressionModel::new(&y, x.clone(), w, 0.5, kernel(fam)).unwrap();
        let fit = model.fit(&FitOptions::default()).unwrap().require_converged().unwrap();
        let (b_ols, mse) = ols(model.ln_y(), &x);
        worst.0 = worst.0.max((&fit.theta.beta - b_ols).amax());
        worst.1 = worst.1.max((fit.theta.tau[0].exp() - mse).abs());
    }
    worst
}

/// Largest norm-wise relative error `‖s − s_fd‖∞ / max(‖s‖∞, 1)` over
/// `cases` random `(design, data, θ)` draws for one family.
pub fn score_fd_error(family: KernelFamily, cases: usize, seed: u64) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..cases {
        let mut r = rng(seed.wrapping_mul(1000) + c as u64);
        let q = r.random_range(0.1..0.9);
        let truth = ParamVector::new(
            vec![
                r.random_range(0.0..2.0),
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
            ],
            vec![r.random_range(-1.5..0.5), r.random_range(-1.0..1.0)],
        );
        let model = simulated_model(family, q, 40, 3, 2, &truth, r.random());
        let at = ParamVector::from_vector(&truth.to_vector().map(|v| v + r.random_range(-0.3..0.3)), 3);
        let s = model.score(&at).unwrap();
        let fd = fd_gradient(
            |t| model.loglik(&ParamVector::from_vector(t, 3)).unwrap(),
            &at.to_vector(),
        );
        worst = worst.max((&s - fd).amax() / s.amax().max(1.0));
    }
    worst
}
