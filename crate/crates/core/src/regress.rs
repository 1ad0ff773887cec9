//! Log-symmetric quantile regression: `ln Q_i = x_iᵀβ`, `ln φ_i = w_iᵀτ`.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{DensityKernel, FisherWeights, KernelFamily};
use crate::optim::{self, BfgsOptions};
use crate::parallel::{self, Execution};
use crate::qls::standardize;

/// Which matrix backs the reported covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Information {
    #[default]
    Observed,
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub bfgs: BfgsOptions,
    /// `None` skips the covariance entirely.
    pub covariance: Option<Information>,
    /// Used for grid profiling.
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bfgs: BfgsOptions::default(),
            covariance: Some(Information::Observed),
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub beta: DVector<f64>,
    pub tau: DVector<f64>,
}

impl ParamVector {
    pub fn new(beta: Vec<f64>, tau: Vec<f64>) -> Self {
        Self {
            beta: DVector::from_vec(beta),
            tau: DVector::from_vec(tau),
        }
    }

    pub fn len(&self) -> usize {
        self.beta.len() + self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `θ = (βᵀ, τᵀ)ᵀ`.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        v.rows_mut(0, self.beta.len()).copy_from(&self.beta);
        v.rows_mut(self.beta.len(), self.tau.len()).copy_from(&self.tau);
        v
    }

    pub fn from_vector(theta: &DVector<f64>, n_beta: usize) -> Self {
        Self {
            beta: theta.rows(0, n_beta).into_owned(),
            tau: theta.rows(n_beta, theta.len() - n_beta).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.beta.iter().chain(self.tau.iter()).all(|v| v.is_finite())
    }
}

/// One profiled grid point: the extra parameter and its maximized full
/// log-likelihood (`None` when the fit failed).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub family: KernelFamily,
    pub loglik: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta: ParamVector,
    /// Kernel with the chosen extra parameter.
    pub family: KernelFamily,
    /// Full log-likelihood, including `n ln ξ` and `-Σ ln y_i`.
    pub loglik: f64,
    /// Log-likelihood without constants, `Σ [ln g(z_i²) - ½ ln φ_i]`.
    pub kernel_loglik: f64,
    pub covariance: Option<DMatrix<f64>>,
    /// Max-norm of the score over the free parameters.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Positions held fixed during the fit.
    pub fixed: Vec<usize>,
    pub profile: Vec<ProfilePoint>,
}

impl FitResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                iterations: self.iterations,
                gradient_norm: self.gradient_norm,
            })
        }
    }

    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        let c = self.covariance.as_ref()?;
        Some((0..c.nrows()).map(|j| c[(j, j)].max(0.0).sqrt()).collect())
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }
}

/// A kernel bound to a quantile level, with `z_q` and the Fisher weights
/// cached so many models can share them.
#[derive(Debug)]
pub struct KernelAtLevel {
    kernel: Arc<DensityKernel>,
    q: f64,
    z_q: f64,
    /// `G⁻¹(0.75)`, the median of `|Z|`.
    z_75: f64,
    fisher: OnceLock<Result<FisherWeights>>,
}

impl KernelAtLevel {
    pub fn new(kernel: Arc<DensityKernel>, q: f64) -> Result<Self> {
        let z_q = kernel.quantile(q)?;
        let z_75 = kernel.quantile(0.75)?;
        Ok(Self {
            kernel,
            q,
            z_q,
            z_75,
            fisher: OnceLock::new(),
        })
    }

    pub fn from_family(family: KernelFamily, q: f64) -> Result<Self> {
        Self::new(Arc::new(DensityKernel::new(family)?), q)
    }

    pub fn kernel(&self) -> &Arc<DensityKernel> {
        &self.kernel
    }

    pub fn level(&self) -> f64 {
        self.q
    }

    pub fn z_q(&self) -> f64 {
        self.z_q
    }

    pub fn fisher_weights(&self) -> Result<FisherWeights> {
        self.fisher.get_or_init(|| self.kernel.fisher_weights(self.q)).clone()
    }
}

/// Immutable data plus the kernel at a fixed quantile level.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    ln_y: Arc<DVector<f64>>,
    sum_ln_y: f64,
    x: Arc<DMatrix<f64>>,
    w: Arc<DMatrix<f64>>,
    q: f64,
    z_q: f64,
    kernel: Arc<DensityKernel>,
    level: Arc<KernelAtLevel>,
}

fn full_column_rank(m: &DMatrix<f64>) -> bool {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let tol = max * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    max > 0.0 && sv.iter().all(|&s| s > tol)
}

fn has_intercept(m: &DMatrix<f64>) -> bool {
    m.ncols() > 0 && m.column(0).iter().all(|&v| v == 1.0)
}

impl RegressionModel {
    pub fn new(y: &[f64], x: DMatrix<f64>, w: DMatrix<f64>, q: f64, kernel: Arc<DensityKernel>) -> Result<Self> {
        Self::with_level(y, x, w, Arc::new(KernelAtLevel::new(kernel, q)?))
    }

    pub fn with_level(y: &[f64], x: DMatrix<f64>, w: DMatrix<f64>, level: Arc<KernelAtLevel>) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n || w.nrows() != n {
            return Err(Error::Dimension(format!(
                "y has {n} rows, X has {}, W has {}",
                x.nrows(),
                w.nrows()
            )));
        }
        if n <= x.ncols() + w.ncols() {
            return Err(Error::Dimension(format!(
                "need n > {} parameters, got n = {n}",
                x.ncols() + w.ncols()
            )));
        }
        if let Some(bad) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::DomainError(format!(
                "responses must be positive and finite, got {bad}"
            )));
        }
        if !has_intercept(&x) {
            return Err(Error::Dimension("first column of X must be ones".into()));
        }
        if !has_intercept(&w) {
            return Err(Error::Dimension("first column of W must be ones".into()));
        }
        if !full_column_rank(&x) {
            return Err(Error::RankDeficientDesign("X"));
        }
        if !full_column_rank(&w) {
            return Err(Error::RankDeficientDesign("W"));
        }
        let ln_y = DVector::from_iterator(n, y.iter().map(|v| v.ln()));
        Ok(Self {
            sum_ln_y: ln_y.sum(),
            ln_y: Arc::new(ln_y),
            x: Arc::new(x),
            w: Arc::new(w),
            q: level.q,
            z_q: level.z_q,
            kernel: level.kernel.clone(),
            level,
        })
    }

    /// Same data under a different kernel.
    pub fn with_kernel(&self, kernel: Arc<DensityKernel>) -> Result<Self> {
        Ok(self.with_kernel_at_level(Arc::new(KernelAtLevel::new(kernel, self.q)?)))
    }

    /// Same data under a prepared kernel; its level replaces the model's.
    pub fn with_kernel_at_level(&self, level: Arc<KernelAtLevel>) -> Self {
        Self {
            q: level.q,
            z_q: level.z_q,
            kernel: level.kernel.clone(),
            level,
            ..self.clone()
        }
    }

    /// Same design and kernel with a new response vector.
    pub fn with_response(&self, y: &[f64]) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "expected {} responses, got {}",
                self.n(),
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::DomainError(format!(
                "responses must be positive and finite, got {bad}"
            )));
        }
        let ln_y = DVector::from_iterator(y.len(), y.iter().map(|v| v.ln()));
        Ok(Self {
            sum_ln_y: ln_y.sum(),
            ln_y: Arc::new(ln_y),
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.ln_y.len()
    }

    pub fn n_beta(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_tau(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.n_beta() + self.n_tau()
    }

    pub fn level(&self) -> f64 {
        self.q
    }

    pub fn z_q(&self) -> f64 {
        self.z_q
    }

    pub fn kernel(&self) -> &Arc<DensityKernel> {
        &self.kernel
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn ln_y(&self) -> &DVector<f64> {
        &self.ln_y
    }

    pub fn response(&self) -> Vec<f64> {
        self.ln_y.iter().map(|v| v.exp()).collect()
    }

    /// Cached `(d_g, f_g)` at this model's level.
    pub fn fisher_weights(&self) -> Result<FisherWeights> {
        self.level.fisher_weights()
    }

    pub fn kernel_at_level(&self) -> &Arc<KernelAtLevel> {
        &self.level
    }

    fn check(&self, theta: &ParamVector) -> Result<()> {
        if theta.beta.len() != self.n_beta() || theta.tau.len() != self.n_tau() {
            return Err(Error::Dimension(format!(
                "θ has ({}, {}) entries, model expects ({}, {})",
                theta.beta.len(),
                theta.tau.len(),
                self.n_beta(),
                self.n_tau()
            )));
        }
        if !theta.is_finite() {
            return Err(Error::DomainError("θ has non-finite entries".into()));
        }
        Ok(())
    }

    /// Per-observation `(z_i, ln φ_i)`.
    fn standardized(&self, theta: &ParamVector) -> (DVector<f64>, DVector<f64>) {
        let eta = &*self.x * &theta.beta;
        let omega = &*self.w * &theta.tau;
        let z = DVector::from_fn(self.n(), |i, _| {
            standardize(self.ln_y[i], eta[i], (0.5 * omega[i]).exp(), self.z_q)
        });
        (z, omega)
    }

    /// `Σ [ln g(z_i²) - ½ ln φ_i]`.
    pub fn loglik(&self, theta: &ParamVector) -> Result<f64> {
        self.check(theta)?;
        let (z, omega) = self.standardized(theta);
        let mut total = 0.0;
        for i in 0..self.n() {
            total += self.kernel.ln_g(z[i] * z[i]) - 0.5 * omega[i];
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::NonFiniteLikelihood)
        }
    }

    /// Adds `n ln ξ - Σ ln y_i` to a kernel log-likelihood.
    pub fn full_loglik_from(&self, kernel_loglik: f64) -> f64 {
        kernel_loglik + self.n() as f64 * self.kernel.ln_xi() - self.sum_ln_y
    }

    /// Log-density of the observed responses.
    pub fn full_loglik(&self, theta: &ParamVector) -> Result<f64> {
        Ok(self.full_loglik_from(self.loglik(theta)?))
    }

    pub fn score(&self, theta: &ParamVector) -> Result<DVector<f64>> {
        self.check(theta)?;
        self.loglik_and_score(theta).map(|(_, s)| s)
    }

    fn loglik_and_score(&self, theta: &ParamVector) -> Result<(f64, DVector<f64>)> {
        let (z, omega) = self.standardized(theta);
        let n = self.n();
        let mut ll = 0.0;
        let mut a = DVector::zeros(n);
        let mut b = DVector::zeros(n);
        for i in 0..n {
            let zi = z[i];
            ll += self.kernel.ln_g(zi * zi) - 0.5 * omega[i];
            let vz = self.kernel.v_times_z(zi);
            a[i] = vz * (-0.5 * omega[i]).exp();
            b[i] = 0.5 * (vz * (zi - self.z_q) - 1.0);
        }
        if !ll.is_finite() {
            return Err(Error::NonFiniteLikelihood);
        }
        let mut s = DVector::zeros(self.n_params());
        s.rows_mut(0, self.n_beta()).copy_from(&self.x.tr_mul(&a));
        s.rows_mut(self.n_beta(), self.n_tau()).copy_from(&self.w.tr_mul(&b));
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLikelihood);
        }
        Ok((ll, s))
    }

    /// Fisher information `E[ℓ̇ ℓ̇ᵀ]`.
    ///
    /// The β/τ cross block `-(z_q d_g / 2) Xᵀ diag(φ^{-1/2}) W` is zero at `q = 0.5`.
    pub fn expected_information(&self, theta: &ParamVector) -> Result<DMatrix<f64>> {
        self.check(theta)?;
        let fw = self.fisher_weights()?;
        let omega = &*self.w * &theta.tau;
        let (kb, kt) = (self.n_beta(), self.n_tau());
        let inv_phi = omega.map(|o| (-o).exp());
        let inv_sqrt_phi = omega.map(|o| (-0.5 * o).exp());
        let xs = DMatrix::from_fn(self.n(), kb, |i, j| self.x[(i, j)] * inv_phi[i] * fw.d);
        let ibb = self.x.tr_mul(&xs);
        let itt = self.w.tr_mul(&self.w) * (0.25 * fw.f);
        let xc = DMatrix::from_fn(self.n(), kb, |i, j| self.x[(i, j)] * inv_sqrt_phi[i]);
        let ibt = xc.tr_mul(&self.w) * (-0.5 * self.z_q * fw.d);
        let mut info = DMatrix::zeros(kb + kt, kb + kt);
        info.view_mut((0, 0), (kb, kb)).copy_from(&ibb);
        info.view_mut((kb, kb), (kt, kt)).copy_from(&itt);
        info.view_mut((0, kb), (kb, kt)).copy_from(&ibt);
        info.view_mut((kb, 0), (kt, kb)).copy_from(&ibt.transpose());
        Ok(info)
    }

    /// Negative Hessian from central differences of the analytic score.
    pub fn observed_information(&self, theta: &ParamVector) -> Result<DMatrix<f64>> {
        self.check(theta)?;
        let base = theta.to_vector();
        let p = base.len();
        let kb = self.n_beta();
        let h0 = f64::EPSILON.cbrt();
        let mut j = DMatrix::zeros(p, p);
        for c in 0..p {
            let h = h0 * (1.0 + base[c].abs());
            let mut up = base.clone();
            let mut dn = base.clone();
            up[c] += h;
            dn[c] -= h;
            // use the actually representable step
            let step = up[c] - dn[c];
            let su = self.loglik_and_score(&ParamVector::from_vector(&up, kb))?.1;
            let sd = self.loglik_and_score(&ParamVector::from_vector(&dn, kb))?.1;
            j.set_column(c, &(-(su - sd) / step));
        }
        Ok((&j + j.transpose()) * 0.5)
    }

    /// Least squares of `ln y` on X, intercept moved to the q-th quantile.
    ///
    /// `φ⁰` is the mean squared residual for the log-normal kernel; other
    /// kernels match the median absolute residual to `G⁻¹(0.75)`.
    pub fn init_params(&self) -> Result<ParamVector> {
        let svd = self.x.as_ref().clone().svd(true, true);
        let mut beta = svd
            .solve(self.ln_y.as_ref(), 1e-12)
            .map_err(|_| Error::RankDeficientDesign("X"))?;
        let resid = self.ln_y.as_ref() - &*self.x * &beta;
        let phi0 = if self.kernel.family() == KernelFamily::LogNo {
            resid.norm_squared() / self.n() as f64
        } else {
            let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
            abs.sort_by(f64::total_cmp);
            let mid = abs.len() / 2;
            let mad = if abs.len() % 2 == 1 {
                abs[mid]
            } else {
                0.5 * (abs[mid - 1] + abs[mid])
            };
            (mad / self.level.z_75).powi(2)
        };
        if !(phi0 > 0.0 && phi0.is_finite()) {
            return Err(Error::DegenerateSample("zero residual variance in ln y"));
        }
        beta[0] += phi0.sqrt() * self.z_q;
        let mut tau = DVector::zeros(self.n_tau());
        tau[0] = phi0.ln();
        Ok(ParamVector { beta, tau })
    }

    pub fn fit(&self, opts: &FitOptions) -> Result<FitResult> {
        let start = self.init_params()?;
        self.fit_from(&start, &[], opts)
    }

    /// Maximize with the positions in `fixed` held at their values in `start`.
    pub fn fit_from(&self, start: &ParamVector, fixed: &[usize], opts: &FitOptions) -> Result<FitResult> {
        self.check(start)?;
        let p = self.n_params();
        let kb = self.n_beta();
        if let Some(&bad) = fixed.iter().find(|&&j| j >= p) {
            return Err(Error::InvalidHypothesis(format!(
                "index {bad} out of range for {p} parameters"
            )));
        }
        let base = start.to_vector();
        let free: Vec<usize> = (0..p).filter(|j| !fixed.contains(j)).collect();
        let embed = |u: &DVector<f64>| {
            let mut t = base.clone();
            for (k, &j) in free.iter().enumerate() {
                t[j] = u[k];
            }
            ParamVector::from_vector(&t, kb)
        };
        let u0 = DVector::from_iterator(free.len(), free.iter().map(|&j| base[j]));

        if free.is_empty() {
            let ll = self.loglik(start)?;
            return Ok(FitResult {
                theta: start.clone(),
                family: self.kernel.family(),
                loglik: self.full_loglik_from(ll),
                kernel_loglik: ll,
                covariance: None,
                gradient_norm: 0.0,
                iterations: 0,
                converged: true,
                fixed: fixed.to_vec(),
                profile: Vec::new(),
            });
        }

        let seed = self
            .expected_information(start)
            .ok()
            .map(|info| info.select_rows(&free).select_columns(&free))
            .and_then(|m| m.try_inverse())
            .filter(|m| m.iter().all(|v| v.is_finite()));

        let eval = |u: &DVector<f64>| {
            let (ll, s) = self.loglik_and_score(&embed(u)).ok()?;
            let g = DVector::from_iterator(free.len(), free.iter().map(|&j| -s[j]));
            Some((-ll, g))
        };
        let out = optim::minimize(eval, u0, seed, &opts.bfgs).ok_or(Error::NonFiniteLikelihood)?;
        let theta = embed(&out.x);
        let kernel_loglik = -out.value;

        let covariance = match (out.converged && fixed.is_empty(), opts.covariance) {
            (true, Some(kind)) => self.covariance(&theta, kind),
            _ => None,
        };

        Ok(FitResult {
            family: self.kernel.family(),
            loglik: self.full_loglik_from(kernel_loglik),
            kernel_loglik,
            theta,
            covariance,
            gradient_norm: out.gradient.amax(),
            iterations: out.iterations,
            converged: out.converged,
            fixed: fixed.to_vec(),
            profile: Vec::new(),
        })
    }

    fn covariance(&self, theta: &ParamVector, kind: Information) -> Option<DMatrix<f64>> {
        let info = match kind {
            Information::Observed => self.observed_information(theta).ok()?,
            Information::Expected => self.expected_information(theta).ok()?,
        };
        let inv = info.cholesky()?.inverse();
        let sym = (&inv + inv.transpose()) * 0.5;
        let ok = sym.iter().all(|v| v.is_finite()) && (0..sym.nrows()).all(|j| sym[(j, j)] >= 0.0);
        ok.then_some(sym)
    }

    /// Fit at every grid point and keep the largest maximized log-likelihood.
    ///
    /// Converged fits take precedence; ties go to the earlier grid point.
    pub fn profile_extra_parameter(&self, grid: &[KernelFamily], opts: &FitOptions) -> Result<FitResult> {
        if grid.is_empty() {
            return Err(Error::InvalidConfig("empty extra-parameter grid".into()));
        }
        let levels = parallel::map_slice(grid, opts.execution, |fam| {
            KernelAtLevel::from_family(*fam, self.q).map(Arc::new)
        });
        let fits = parallel::map_slice(&levels, opts.execution, |lv| {
            lv.as_ref()
                .map_err(Clone::clone)
                .and_then(|lv| self.with_kernel_at_level(lv.clone()).fit(opts))
        });
        select_profile(grid, fits)
    }

    /// [`Self::profile_extra_parameter`] over kernels prepared at this level.
    pub fn profile_prepared(&self, grid: &[Arc<KernelAtLevel>], opts: &FitOptions) -> Result<FitResult> {
        if grid.is_empty() {
            return Err(Error::InvalidConfig("empty extra-parameter grid".into()));
        }
        let fits = parallel::map_slice(grid, opts.execution, |lv| {
            self.with_kernel_at_level(lv.clone()).fit(opts)
        });
        let families: Vec<KernelFamily> = grid.iter().map(|lv| lv.kernel.family()).collect();
        select_profile(&families, fits)
    }

    /// Fitted `Q̂_i = exp(x_iᵀβ)`.
    pub fn fitted_quantiles(&self, theta: &ParamVector) -> Vec<f64> {
        (&*self.x * &theta.beta).iter().map(|v| v.exp()).collect()
    }

    /// Fitted `φ̂_i = exp(w_iᵀτ)`.
    pub fn fitted_phi(&self, theta: &ParamVector) -> Vec<f64> {
        (&*self.w * &theta.tau).iter().map(|v| v.exp()).collect()
    }

    /// `z_i` at `θ`.
    pub fn standardized_values(&self, theta: &ParamVector) -> Result<Vec<f64>> {
        self.check(theta)?;
        Ok(self.standardized(theta).0.iter().copied().collect())
    }

    /// Fitted CDF values `F̂(y_i) = G(z_i)`.
    pub fn cdf_values(&self, theta: &ParamVector) -> Result<Vec<f64>> {
        Ok(self
            .standardized_values(theta)?
            .into_iter()
            .map(|z| self.kernel.cdf(z))
            .collect())
    }

    /// Fresh responses from the fitted law at `θ`.
    pub fn simulate<R: Rng + ?Sized>(&self, theta: &ParamVector, rng: &mut R) -> Result<Vec<f64>> {
        self.check(theta)?;
        simulate_response(&self.x, &self.w, theta, self.z_q, &self.kernel, rng)
    }
}

fn select_profile(grid: &[KernelFamily], fits: Vec<Result<FitResult>>) -> Result<FitResult> {
    let profile: Vec<ProfilePoint> = grid
        .iter()
        .zip(&fits)
        .map(|(fam, r)| ProfilePoint {
            family: *fam,
            loglik: r.as_ref().ok().map(|f| f.loglik),
        })
        .collect();
    let mut best: Option<FitResult> = None;
    for fit in fits.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => (fit.converged && !b.converged) || (fit.converged == b.converged && fit.loglik > b.loglik),
        };
        if better {
            best = Some(fit);
        }
    }
    let mut best = best.ok_or(Error::AllGridPointsFailed)?;
    best.profile = profile;
    Ok(best)
}

/// `y_i = Q_i exp(√φ_i (Z_i - z_q))` with `Z_i ~ g`.
pub fn simulate_response<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    theta: &ParamVector,
    z_q: f64,
    kernel: &DensityKernel,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let eta = x * &theta.beta;
    let omega = w * &theta.tau;
    let y: Vec<f64> = (0..x.nrows())
        .map(|i| (eta[i] + (0.5 * omega[i]).exp() * (kernel.draw(rng) - z_q)).exp())
        .collect();
    if y.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(y)
    } else {
        Err(Error::DegenerateSample("simulated response overflowed"))
    }
}
