//! BFGS quasi-Newton minimization with Armijo backtracking.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the gradient max-norm drops below this.
    pub grad_tol: f64,
    /// Stop when the relative objective change drops below this.
    pub rel_tol: f64,
    pub armijo: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-8,
            rel_tol: 1e-12,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

/// Minimize `f`, where `eval` returns `(f(x), ∇f(x))` or `None` off the domain.
///
/// `inverse_hessian` seeds the quasi-Newton approximation; identity is used
/// (rescaled after the first step) otherwise. Returns `None` only if the
/// starting point itself is infeasible.
pub fn minimize<F>(
    eval: F,
    x0: DVector<f64>,
    inverse_hessian: Option<DMatrix<f64>>,
    opts: &BfgsOptions,
) -> Option<BfgsOutcome>
where
    F: Fn(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let dim = x0.len();
    let (mut f, mut g) = eval(&x0).filter(|(f, g)| f.is_finite() && g.iter().all(|v| v.is_finite()))?;
    let mut x = x0;
    let seeded = inverse_hessian.is_some();
    let mut h = inverse_hessian.unwrap_or_else(|| DMatrix::identity(dim, dim));
    let mut fresh = !seeded;
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if g.amax() < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h = DMatrix::identity(dim, dim);
            fresh = true;
            d = -g.clone();
            slope = g.dot(&d);
        }

        let mut step = None;
        let mut t = 1.0;
        let scale = 1.0 + x.amax();
        for _ in 0..60 {
            if t * d.amax() <= 1e-15 * scale {
                break;
            }
            let trial = &x + &d * t;
            if let Some((ft, gt)) = eval(&trial) {
                let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());
                if finite && ft < f && ft <= f + opts.armijo * t * slope {
                    step = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = step else {
            if !fresh {
                // stale curvature; retry along steepest descent
                h = DMatrix::identity(dim, dim) / g.amax().max(1.0);
                fresh = true;
                continue;
            }
            converged = g.amax() <= 1e-6 * (1.0 + f.abs());
            break;
        };

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        let change = (f - f_new).abs();
        x = x_new;
        g = g_new;
        let f_old = f;
        f = f_new;
        trace.push(f);

        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← H - ρ(s yᵀH + H y sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        }

        if change <= opts.rel_tol * f_old.abs().max(1.0) && g.amax() <= 1e-6 * (1.0 + f.abs()) {
            converged = true;
            break;
        }
    }
    if !converged && g.amax() < opts.grad_tol {
        converged = true;
    }

    Some(BfgsOutcome {
        x,
        value: f,
        gradient: g,
        iterations,
        converged,
        trace,
    })
}
