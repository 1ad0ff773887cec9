//! Simulation studies: estimator performance, residual behavior and
//! criteria success rates (study 1); test size and power (study 2).
//!
//! Every replication draws from its own ChaCha8 stream `(seed, rep)`, so
//! parallel and sequential runs produce identical reports.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{residual_summary, residual_values, ResidualKind, Summary};
use crate::error::{Error, Result};
use crate::inference::{confidence_intervals, fit_criteria, Hypothesis, NullFits, TestKind};
use crate::kernels::{FamilyTag, KernelFamily};
use crate::parallel::{self, Execution};
use crate::regress::{simulate_response, FitOptions, FitResult, KernelAtLevel, ParamVector, RegressionModel};
use crate::special;

/// Replications may be dropped up to this fraction before a study fails.
pub const MAX_DROP_FRACTION: f64 = 0.05;

/// Stream used for the shared design when covariates are held fixed.
const DESIGN_STREAM: u64 = u64::MAX;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn bernoulli_column<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect()
}

/// Redraw until every covariate column takes both values (full rank).
fn bernoulli_design<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> DMatrix<f64> {
    loop {
        let cols: Vec<Vec<f64>> = (0..k).map(|_| bernoulli_column(rng, n)).collect();
        let x = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
        if x.clone().svd(false, false).singular_values.iter().all(|&s| s > 1e-8) {
            return x;
        }
    }
}

fn uniform_design<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { w[i] })
}

fn check_drops(dropped: usize, total: usize) -> Result<()> {
    if dropped as f64 > MAX_DROP_FRACTION * total as f64 {
        Err(Error::ExcessiveNonConvergence { dropped, total })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterStats {
    pub truth: f64,
    pub bias: f64,
    pub mse: f64,
    pub cp: f64,
}

/// Bias, MSE and coverage per column of `estimates` (one row per replication).
pub fn aggregate(estimates: &[Vec<f64>], truths: &[f64], covered: &[Vec<bool>]) -> Vec<ParameterStats> {
    let m = estimates.len() as f64;
    truths
        .iter()
        .enumerate()
        .map(|(j, &truth)| {
            let (mut bias, mut mse, mut hits) = (0.0, 0.0, 0usize);
            for (row, cov) in estimates.iter().zip(covered) {
                let d = row[j] - truth;
                bias += d;
                mse += d * d;
                hits += usize::from(cov[j]);
            }
            ParameterStats {
                truth,
                bias: bias / m,
                mse: mse / m,
                cp: hits as f64 / m,
            }
        })
        .collect()
}

fn mean_summary(items: &[Summary]) -> Summary {
    let m = items.len() as f64;
    let avg = |f: fn(&Summary) -> f64| items.iter().map(f).sum::<f64>() / m;
    Summary {
        mean: avg(|s| s.mean),
        median: avg(|s| s.median),
        sd: avg(|s| s.sd),
        skewness: avg(|s| s.skewness),
        kurtosis: avg(|s| s.kurtosis),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study1Config {
    pub family: KernelFamily,
    pub q: f64,
    pub n: usize,
    pub replications: usize,
    /// `(β₀, β₁)`.
    pub beta: [f64; 2],
    /// `(τ₀, τ₁)`.
    pub tau: [f64; 2],
    pub seed: u64,
    /// Draw covariates once instead of per replication.
    pub fixed_design: bool,
    /// Refit every candidate family to score the information criteria.
    pub success_rates: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Study1Config {
    pub fn new(family: KernelFamily, q: f64, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            family,
            q,
            n,
            replications,
            beta: [1.5, 0.5],
            tau: [1.0, 0.5],
            seed,
            fixed_design: false,
            success_rates: true,
            execution: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.n <= 5 {
            return Err(Error::InvalidConfig(format!("n must exceed 5, got {}", self.n)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidConfig(format!("q must be in (0, 1), got {}", self.q)));
        }
        if self.beta.iter().chain(&self.tau).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite true coefficient".into()));
        }
        self.family.validate()
    }

    pub fn truth(&self) -> ParamVector {
        ParamVector::new(self.beta.to_vec(), self.tau.to_vec())
    }

    /// The generating family first, then the study default of every other tag.
    pub fn candidates(&self) -> Vec<KernelFamily> {
        let gen = self.family.tag();
        std::iter::once(self.family)
            .chain(
                FamilyTag::ALL
                    .into_iter()
                    .filter(|t| *t != gen)
                    .map(KernelFamily::study_default),
            )
            .collect()
    }
}

pub const STUDY1_PARAMETERS: [&str; 4] = ["beta0", "beta1", "tau0", "tau1"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRates {
    pub aic: f64,
    pub bic: f64,
    pub aicc: f64,
    /// Fraction of replications where the three criteria picked the same family.
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study1Report {
    pub config: Study1Config,
    pub kept: usize,
    pub dropped: usize,
    pub parameters: Vec<(String, ParameterStats)>,
    pub gcs: Summary,
    pub rq: Summary,
    pub success: Option<SuccessRates>,
    /// Per kept replication, the families chosen by AIC, BIC and AICc.
    pub selections: Vec<[FamilyTag; 3]>,
}

struct Rep1 {
    estimates: Vec<f64>,
    covered: Vec<bool>,
    gcs: Summary,
    rq: Summary,
    selection: Option<[FamilyTag; 3]>,
}

fn inner_options() -> FitOptions {
    FitOptions {
        execution: Execution::Sequential,
        ..FitOptions::default()
    }
}

/// Index of the smallest value; ties keep the first.
fn argmin(values: &[(FamilyTag, f64)]) -> FamilyTag {
    let mut best = values[0];
    for &c in &values[1..] {
        if c.1 < best.1 {
            best = c;
        }
    }
    best.0
}

fn select_families(
    model: &RegressionModel,
    own: &FitResult,
    candidates: &[Arc<KernelAtLevel>],
    opts: &FitOptions,
) -> Option<[FamilyTag; 3]> {
    let n = model.n();
    let mut scores = Vec::with_capacity(candidates.len());
    for (i, lv) in candidates.iter().enumerate() {
        let fit = if i == 0 {
            own.clone()
        } else {
            match model.with_kernel_at_level(lv.clone()).fit(opts) {
                Ok(f) if f.converged => f,
                _ => continue,
            }
        };
        let c = fit_criteria(&fit, n).ok()?;
        scores.push((lv.kernel().family().tag(), c));
    }
    let pick =
        |f: fn(&crate::inference::Criteria) -> f64| argmin(&scores.iter().map(|(t, c)| (*t, f(c))).collect::<Vec<_>>());
    Some([pick(|c| c.aic), pick(|c| c.bic), pick(|c| c.aicc)])
}

/// One simulated dataset: response and both design matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

fn study1_fixed_design(cfg: &Study1Config) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = rng_for(cfg.seed, DESIGN_STREAM);
    let x = bernoulli_design(&mut rng, cfg.n, 1);
    let w = uniform_design(&mut rng, cfg.n);
    (x, w)
}

fn study1_data(
    cfg: &Study1Config,
    level: &KernelAtLevel,
    fixed: Option<&(DMatrix<f64>, DMatrix<f64>)>,
    rep: usize,
) -> Result<Dataset> {
    let mut rng = rng_for(cfg.seed, rep as u64);
    let (x, w) = match fixed {
        Some((x, w)) => (x.clone(), w.clone()),
        None => {
            let x = bernoulli_design(&mut rng, cfg.n, 1);
            let w = uniform_design(&mut rng, cfg.n);
            (x, w)
        }
    };
    let y = simulate_response(&x, &w, &cfg.truth(), level.z_q(), level.kernel(), &mut rng)?;
    Ok(Dataset { y, x, w })
}

/// The dataset replication `rep` of study 1 fits.
pub fn study1_dataset(cfg: &Study1Config, rep: usize) -> Result<Dataset> {
    cfg.validate()?;
    let level = KernelAtLevel::from_family(cfg.family, cfg.q)?;
    let fixed = cfg.fixed_design.then(|| study1_fixed_design(cfg));
    study1_data(cfg, &level, fixed.as_ref(), rep)
}

fn study1_replication(
    cfg: &Study1Config,
    levels: &[Arc<KernelAtLevel>],
    fixed: Option<&(DMatrix<f64>, DMatrix<f64>)>,
    rep: usize,
) -> Option<Rep1> {
    let own = &levels[0];
    let truth = cfg.truth();
    let data = study1_data(cfg, own, fixed, rep).ok()?;
    let model = RegressionModel::with_level(&data.y, data.x, data.w, own.clone()).ok()?;
    let opts = inner_options();
    let fit = model.fit(&opts).ok().filter(|f| f.converged)?;
    let ci = confidence_intervals(&fit, 0.95).ok()?;
    let t = truth.to_vector();
    let covered = ci.iter().zip(t.iter()).map(|(c, &v)| c.contains(v)).collect();
    let gcs = residual_summary(&residual_values(&model, &fit, ResidualKind::Gcs).ok()?).ok()?;
    let rq = residual_summary(&residual_values(&model, &fit, ResidualKind::Rq).ok()?).ok()?;
    let selection = if cfg.success_rates {
        Some(select_families(&model, &fit, levels, &opts)?)
    } else {
        None
    };
    Some(Rep1 {
        estimates: fit.theta.to_vector().iter().copied().collect(),
        covered,
        gcs,
        rq,
        selection,
    })
}

pub fn run_study1(cfg: &Study1Config) -> Result<Study1Report> {
    cfg.validate()?;
    let families = if cfg.success_rates {
        cfg.candidates()
    } else {
        vec![cfg.family]
    };
    let levels = families
        .iter()
        .map(|f| KernelAtLevel::from_family(*f, cfg.q).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    // warm the Fisher-weight caches once instead of racing in every replication
    parallel::map_slice(&levels, cfg.execution, |lv| lv.fisher_weights().ok());

    let fixed = cfg.fixed_design.then(|| study1_fixed_design(cfg));
    let reps = parallel::map_indexed(cfg.replications, cfg.execution, |r| {
        study1_replication(cfg, &levels, fixed.as_ref(), r)
    });
    let kept: Vec<Rep1> = reps.into_iter().flatten().collect();
    let dropped = cfg.replications - kept.len();
    check_drops(dropped, cfg.replications)?;
    if kept.is_empty() {
        return Err(Error::ExcessiveNonConvergence {
            dropped,
            total: cfg.replications,
        });
    }

    let estimates: Vec<Vec<f64>> = kept.iter().map(|r| r.estimates.clone()).collect();
    let covered: Vec<Vec<bool>> = kept.iter().map(|r| r.covered.clone()).collect();
    let truth: Vec<f64> = cfg.truth().to_vector().iter().copied().collect();
    let stats = aggregate(&estimates, &truth, &covered);
    let parameters = STUDY1_PARAMETERS.iter().map(|s| s.to_string()).zip(stats).collect();
    let gcs = mean_summary(&kept.iter().map(|r| r.gcs).collect::<Vec<_>>());
    let rq = mean_summary(&kept.iter().map(|r| r.rq).collect::<Vec<_>>());

    let selections: Vec<[FamilyTag; 3]> = kept.iter().filter_map(|r| r.selection).collect();
    let success = (!selections.is_empty()).then(|| {
        let m = selections.len() as f64;
        let gen = cfg.family.tag();
        let rate = |k: usize| selections.iter().filter(|s| s[k] == gen).count() as f64 / m;
        SuccessRates {
            aic: rate(0),
            bic: rate(1),
            aicc: rate(2),
            agreement: selections.iter().filter(|s| s[0] == s[1] && s[1] == s[2]).count() as f64 / m,
        }
    });

    Ok(Study1Report {
        config: cfg.clone(),
        kept: kept.len(),
        dropped,
        parameters,
        gcs,
        rq,
        success,
        selections,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study2Config {
    pub family: KernelFamily,
    pub q: f64,
    pub n: usize,
    pub replications: usize,
    /// Number of slope coefficients under test, 1 to 3.
    pub r: usize,
    pub alphas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub phi: f64,
    pub seed: u64,
    pub fixed_design: bool,
    pub tests: Vec<TestKind>,
    /// Keep every statistic, not only the rejection rates.
    pub keep_statistics: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Study2Config {
    pub fn new(family: KernelFamily, q: f64, n: usize, replications: usize, r: usize, seed: u64) -> Self {
        Self {
            family,
            q,
            n,
            replications,
            r,
            alphas: vec![0.01, 0.05, 0.1],
            deltas: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            phi: 3.0,
            seed,
            fixed_design: false,
            tests: TestKind::ALL.to_vec(),
            keep_statistics: false,
            execution: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if !(1..=3).contains(&self.r) {
            return Err(Error::InvalidConfig(format!("r must be 1, 2 or 3, got {}", self.r)));
        }
        if self.n <= 6 {
            return Err(Error::InvalidConfig(format!("n must exceed 6, got {}", self.n)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidConfig(format!("q must be in (0, 1), got {}", self.q)));
        }
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(Error::InvalidConfig(format!("φ must be positive, got {}", self.phi)));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::InvalidConfig("α levels must lie in (0, 1]".into()));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidConfig("δ grid must be nonempty and finite".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidConfig("no test statistics requested".into()));
        }
        self.family.validate()
    }

    /// `β = (1, δ, …, δ, 1, …)` with `r` entries equal to δ, and `τ₀ = ln φ`.
    pub fn truth(&self, delta: f64) -> ParamVector {
        let beta = (0..4)
            .map(|j| if (1..=self.r).contains(&j) { delta } else { 1.0 })
            .collect();
        ParamVector::new(beta, vec![self.phi.ln()])
    }

    pub fn hypothesis(&self) -> Hypothesis {
        Hypothesis::zeros((1..=self.r).collect()).expect("1 <= r <= 3")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub delta: f64,
    pub test: TestKind,
    pub alpha: f64,
    /// Fraction of replications with an available statistic that reject.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaStatistics {
    pub delta: f64,
    pub kept: usize,
    pub dropped: usize,
    /// Per test, aligned with `Study2Config::tests`: kept replications where
    /// the statistic itself was undefined (singular information).
    pub unavailable: Vec<usize>,
    /// Statistics per test, one entry per kept replication, NaN where unavailable.
    pub statistics: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study2Report {
    pub config: Study2Config,
    pub rates: Vec<RejectionRate>,
    pub per_delta: Vec<DeltaStatistics>,
}

impl Study2Report {
    pub fn rate(&self, delta: f64, test: TestKind, alpha: f64) -> Option<f64> {
        self.rates
            .iter()
            .find(|r| r.delta == delta && r.test == test && r.alpha == alpha)
            .map(|r| r.rate)
    }
}

fn study2_data(
    cfg: &Study2Config,
    level: &KernelAtLevel,
    fixed: Option<&DMatrix<f64>>,
    delta: f64,
    rep: usize,
) -> Result<Dataset> {
    // same stream for every δ: common random numbers along the power curve
    let mut rng = rng_for(cfg.seed, rep as u64);
    let x = match fixed {
        Some(x) => x.clone(),
        None => bernoulli_design(&mut rng, cfg.n, 3),
    };
    let w = DMatrix::from_element(cfg.n, 1, 1.0);
    let y = simulate_response(&x, &w, &cfg.truth(delta), level.z_q(), level.kernel(), &mut rng)?;
    Ok(Dataset { y, x, w })
}

/// The dataset replication `rep` of study 2 fits at effect size `delta`.
pub fn study2_dataset(cfg: &Study2Config, delta: f64, rep: usize) -> Result<Dataset> {
    cfg.validate()?;
    let level = KernelAtLevel::from_family(cfg.family, cfg.q)?;
    let fixed = cfg
        .fixed_design
        .then(|| bernoulli_design(&mut rng_for(cfg.seed, DESIGN_STREAM), cfg.n, 3));
    study2_data(cfg, &level, fixed.as_ref(), delta, rep)
}

fn study2_replication(
    cfg: &Study2Config,
    level: &Arc<KernelAtLevel>,
    fixed: Option<&DMatrix<f64>>,
    delta: f64,
    rep: usize,
) -> Option<Vec<Option<f64>>> {
    let data = study2_data(cfg, level, fixed, delta, rep).ok()?;
    let model = RegressionModel::with_level(&data.y, data.x, data.w, level.clone()).ok()?;
    let fits = NullFits::new(&model, &cfg.hypothesis(), &inner_options()).ok()?;
    Some(
        cfg.tests
            .iter()
            .map(|&k| fits.run(k).ok().map(|t| t.statistic))
            .collect(),
    )
}

pub fn run_study2(cfg: &Study2Config) -> Result<Study2Report> {
    cfg.validate()?;
    let level = Arc::new(KernelAtLevel::from_family(cfg.family, cfg.q)?);
    level.fisher_weights()?;
    let fixed = cfg
        .fixed_design
        .then(|| bernoulli_design(&mut rng_for(cfg.seed, DESIGN_STREAM), cfg.n, 3));
    let df = cfg.r;
    let criticals: Vec<f64> = cfg
        .alphas
        .iter()
        .map(|&a| special::chi_square_critical(a, df))
        .collect();

    let mut rates = Vec::new();
    let mut per_delta = Vec::new();
    for &delta in &cfg.deltas {
        let reps = parallel::map_indexed(cfg.replications, cfg.execution, |r| {
            study2_replication(cfg, &level, fixed.as_ref(), delta, r)
        });
        let kept: Vec<Vec<Option<f64>>> = reps.into_iter().flatten().collect();
        let dropped = cfg.replications - kept.len();
        check_drops(dropped, cfg.replications)?;
        if kept.is_empty() {
            return Err(Error::ExcessiveNonConvergence {
                dropped,
                total: cfg.replications,
            });
        }
        let mut unavailable = Vec::with_capacity(cfg.tests.len());
        for (ti, &test) in cfg.tests.iter().enumerate() {
            let avail: Vec<f64> = kept.iter().filter_map(|s| s[ti]).collect();
            unavailable.push(kept.len() - avail.len());
            for (&alpha, &crit) in cfg.alphas.iter().zip(&criticals) {
                let hits = avail.iter().filter(|&&s| s > crit).count();
                rates.push(RejectionRate {
                    delta,
                    test,
                    alpha,
                    rate: if avail.is_empty() {
                        f64::NAN
                    } else {
                        hits as f64 / avail.len() as f64
                    },
                });
            }
        }
        let statistics = if cfg.keep_statistics {
            (0..cfg.tests.len())
                .map(|ti| kept.iter().map(|s| s[ti].unwrap_or(f64::NAN)).collect())
                .collect()
        } else {
            Vec::new()
        };
        per_delta.push(DeltaStatistics {
            delta,
            kept: kept.len(),
            dropped,
            unavailable,
            statistics,
        });
    }
    Ok(Study2Report {
        config: cfg.clone(),
        rates,
        per_delta,
    })
}
