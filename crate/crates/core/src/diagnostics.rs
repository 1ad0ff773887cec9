//! Generalized Cox–Snell and quantile residuals, moment summaries and
//! simulated QQ envelopes.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DensityKernel;
use crate::parallel::{self, Execution};
use crate::qls::CDF_CLAMP;
use crate::regress::{FitOptions, FitResult, RegressionModel};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualKind {
    Gcs,
    Rq,
}

impl ResidualKind {
    /// Reference-distribution quantile.
    pub fn reference_quantile(self, p: f64) -> f64 {
        match self {
            ResidualKind::Gcs => -(-p).ln_1p(),
            ResidualKind::Rq => special::normal_quantile(p),
        }
    }

    fn of_cdf(self, f: f64) -> f64 {
        let f = f.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
        match self {
            ResidualKind::Gcs => -(1.0 - f).ln(),
            ResidualKind::Rq => special::normal_quantile(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub skewness: f64,
    /// Excess kurtosis.
    pub kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub kind: ResidualKind,
    pub values: Vec<f64>,
    pub summary: Summary,
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Mean, median, sd (n−1), skewness `m₃/m₂^{3/2}` and excess kurtosis `m₄/m₂² − 3`.
pub fn residual_summary(values: &[f64]) -> Result<Summary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::DegenerateSample("need at least two values"));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSample("zero variance"));
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        mean,
        median: median_sorted(&sorted),
        sd,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// The model re-bound to the kernel the fit was produced with.
fn fitted_model(model: &RegressionModel, fit: &FitResult) -> Result<RegressionModel> {
    if model.kernel().family() == fit.family {
        Ok(model.clone())
    } else {
        model.with_kernel(Arc::new(DensityKernel::new(fit.family)?))
    }
}

/// Residuals without the summary.
pub fn residual_values(model: &RegressionModel, fit: &FitResult, kind: ResidualKind) -> Result<Vec<f64>> {
    let m = fitted_model(model, fit)?;
    Ok(m.cdf_values(&fit.theta)?
        .into_iter()
        .map(|f| kind.of_cdf(f))
        .collect())
}

pub fn residuals(model: &RegressionModel, fit: &FitResult, kind: ResidualKind) -> Result<ResidualReport> {
    let values = residual_values(model, fit, kind)?;
    let summary = residual_summary(&values)?;
    Ok(ResidualReport { kind, values, summary })
}

/// `-ln(1 - F̂_i)`.
pub fn gcs_residuals(model: &RegressionModel, fit: &FitResult) -> Result<ResidualReport> {
    residuals(model, fit, ResidualKind::Gcs)
}

/// `Φ⁻¹(F̂_i)`.
pub fn rq_residuals(model: &RegressionModel, fit: &FitResult) -> Result<ResidualReport> {
    residuals(model, fit, ResidualKind::Rq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeData {
    pub kind: ResidualKind,
    pub theoretical: Vec<f64>,
    pub ordered: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub band: f64,
    pub sims: usize,
    /// Simulated refits that failed or did not converge.
    pub failed: usize,
}

impl EnvelopeData {
    pub fn fraction_inside(&self) -> f64 {
        let inside = self
            .ordered
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|&(r, (lo, hi))| lo <= r && r <= hi)
            .count();
        inside as f64 / self.ordered.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeOptions {
    pub sims: usize,
    pub band: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            sims: 100,
            band: 0.95,
            seed: 1,
            execution: Execution::Parallel,
        }
    }
}

impl EnvelopeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.sims < 19 {
            return Err(Error::InvalidConfig(format!(
                "envelope needs at least 19 simulations, got {}",
                self.sims
            )));
        }
        if !(0.0..1.0).contains(&self.band) {
            return Err(Error::InvalidConfig(format!(
                "band must be in [0, 1), got {}",
                self.band
            )));
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Simulate from the fitted law, refit, and take pointwise bands of the
/// ordered residuals.
pub fn qq_envelope(
    model: &RegressionModel,
    fit: &FitResult,
    kind: ResidualKind,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeData> {
    opts.validate()?;
    let m = fitted_model(model, fit)?;
    let n = m.n();
    let mut ordered = residual_values(&m, fit, kind)?;
    ordered.sort_by(f64::total_cmp);

    let fit_opts = FitOptions {
        covariance: None,
        execution: Execution::Sequential,
        ..FitOptions::default()
    };
    let runs = parallel::map_indexed(opts.sims, opts.execution, |s| -> Option<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(s as u64);
        let y = m.simulate(&fit.theta, &mut rng).ok()?;
        let ms = m.with_response(&y).ok()?;
        let refit = ms.fit(&fit_opts).ok().filter(|f| f.converged)?;
        let mut r = residual_values(&ms, &refit, kind).ok()?;
        r.sort_by(f64::total_cmp);
        Some(r)
    });
    let ok: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    let failed = opts.sims - ok.len();
    if failed as f64 > 0.2 * opts.sims as f64 {
        return Err(Error::EnvelopeUnstable {
            failed,
            total: opts.sims,
        });
    }
    let (plo, phi) = (0.5 * (1.0 - opts.band), 0.5 * (1.0 + opts.band));
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut column = vec![0.0; ok.len()];
    for i in 0..n {
        for (c, r) in column.iter_mut().zip(&ok) {
            *c = r[i];
        }
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&column, plo));
        upper.push(quantile_sorted(&column, phi));
    }
    let theoretical = (0..n)
        .map(|i| kind.reference_quantile((i as f64 + 0.5) / n as f64))
        .collect();
    Ok(EnvelopeData {
        kind,
        theoretical,
        ordered,
        lower,
        upper,
        band: opts.band,
        sims: opts.sims,
        failed,
    })
}

/// Kolmogorov–Smirnov distance between the sample and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 5% KS critical value with Stephens' finite-n correction.
pub fn ks_critical_5pct(n: usize) -> f64 {
    let s = (n as f64).sqrt();
    1.358 / (s + 0.12 + 0.11 / s)
}
