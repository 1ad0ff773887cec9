//! Wald, score, likelihood-ratio and gradient tests for subvector nulls,
//! Wald intervals, and information criteria.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::{FitOptions, FitResult, Information, RegressionModel};
use crate::special;

/// Statistics more negative than this are flagged when clamped to zero.
pub const CLAMP_SLACK: f64 = 1e-8;

/// `H₀: θ_j = value_j` for each listed position `j` of `θ = (β, τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Hypothesis {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidHypothesis("no restricted positions".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::InvalidHypothesis(format!(
                "{} positions but {} values",
                indices.len(),
                values.len()
            )));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::InvalidHypothesis("repeated position".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHypothesis("non-finite null value".into()));
        }
        Ok(Self { indices, values })
    }

    /// All listed positions equal zero.
    pub fn zeros(indices: Vec<usize>) -> Result<Self> {
        let values = vec![0.0; indices.len()];
        Self::new(indices, values)
    }

    pub fn df(&self) -> usize {
        self.indices.len()
    }

    fn validate_for(&self, p: usize) -> Result<()> {
        match self.indices.iter().find(|&&j| j >= p) {
            Some(j) => Err(Error::InvalidHypothesis(format!(
                "position {j} out of range for {p} parameters"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    Wald,
    Score,
    ScoreObserved,
    LR,
    Gradient,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Wald,
        TestKind::Score,
        TestKind::ScoreObserved,
        TestKind::LR,
        TestKind::Gradient,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TestKind::Wald => "S_W",
            TestKind::Score => "S_R",
            TestKind::ScoreObserved => "S_R_obs",
            TestKind::LR => "S_LR",
            TestKind::Gradient => "S_T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// The raw statistic was below `-CLAMP_SLACK` before clamping.
    pub clamped: bool,
}

impl TestResult {
    fn new(kind: TestKind, raw: f64, df: usize) -> Self {
        let statistic = raw.max(0.0);
        Self {
            kind,
            statistic,
            df,
            p_value: special::chi_square_sf(statistic, df),
            clamped: raw < -CLAMP_SLACK,
        }
    }

    /// `statistic > C_{df, 1-alpha}`.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.statistic > special::chi_square_critical(alpha, self.df)
    }
}

/// Unrestricted and restricted fits for one null, shared by all statistics.
#[derive(Debug, Clone)]
pub struct NullFits {
    pub model: RegressionModel,
    pub hypothesis: Hypothesis,
    pub unrestricted: FitResult,
    pub restricted: FitResult,
}

impl NullFits {
    /// Fit both models. The restricted fit starts from `θ̂` with the null imposed.
    pub fn new(model: &RegressionModel, h: &Hypothesis, opts: &FitOptions) -> Result<Self> {
        let unrestricted = model.fit(opts)?.require_converged()?;
        Self::with_unrestricted(model, h, unrestricted, opts)
    }

    pub fn with_unrestricted(
        model: &RegressionModel,
        h: &Hypothesis,
        unrestricted: FitResult,
        opts: &FitOptions,
    ) -> Result<Self> {
        h.validate_for(model.n_params())?;
        let unrestricted = unrestricted.require_converged()?;
        let kb = model.n_beta();
        let mut start = unrestricted.theta.to_vector();
        for (&j, &v) in h.indices.iter().zip(&h.values) {
            start[j] = v;
        }
        let start = crate::regress::ParamVector::from_vector(&start, kb);
        let restricted_opts = FitOptions {
            covariance: None,
            ..*opts
        };
        let restricted = model
            .fit_from(&start, &h.indices, &restricted_opts)?
            .require_converged()?;
        Ok(Self {
            model: model.clone(),
            hypothesis: h.clone(),
            unrestricted,
            restricted,
        })
    }

    pub fn lr(&self) -> TestResult {
        let raw = -2.0 * (self.restricted.kernel_loglik - self.unrestricted.kernel_loglik);
        TestResult::new(TestKind::LR, raw, self.hypothesis.df())
    }

    pub fn wald(&self) -> Result<TestResult> {
        let cov = match &self.unrestricted.covariance {
            Some(c) => c.clone(),
            None => {
                let j = self.model.observed_information(&self.unrestricted.theta)?;
                invert_spd(j)?
            }
        };
        let idx = &self.hypothesis.indices;
        let est = self.unrestricted.theta.to_vector();
        let diff = DVector::from_iterator(
            idx.len(),
            idx.iter().zip(&self.hypothesis.values).map(|(&j, &v)| est[j] - v),
        );
        let block = cov.select_rows(idx).select_columns(idx);
        let raw = quad_form_inverse(block, &diff)?;
        Ok(TestResult::new(TestKind::Wald, raw, self.hypothesis.df()))
    }

    pub fn score(&self, information: Information) -> Result<TestResult> {
        let theta = &self.restricted.theta;
        let s = self.model.score(theta)?;
        let (m, kind) = match information {
            Information::Expected => (self.model.expected_information(theta)?, TestKind::Score),
            Information::Observed => (self.model.observed_information(theta)?, TestKind::ScoreObserved),
        };
        let raw = quad_form_inverse(m, &s)?;
        Ok(TestResult::new(kind, raw, self.hypothesis.df()))
    }

    pub fn gradient(&self) -> Result<TestResult> {
        let s = self.model.score(&self.restricted.theta)?;
        let diff = self.unrestricted.theta.to_vector() - self.restricted.theta.to_vector();
        Ok(TestResult::new(TestKind::Gradient, s.dot(&diff), self.hypothesis.df()))
    }

    pub fn run(&self, kind: TestKind) -> Result<TestResult> {
        match kind {
            TestKind::Wald => self.wald(),
            TestKind::Score => self.score(Information::Expected),
            TestKind::ScoreObserved => self.score(Information::Observed),
            TestKind::LR => Ok(self.lr()),
            TestKind::Gradient => self.gradient(),
        }
    }
}

fn invert_spd(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = m.cholesky().ok_or(Error::SingularInformation)?.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `vᵀ M⁻¹ v` for symmetric positive definite `M`.
fn quad_form_inverse(m: DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    let chol = m.cholesky().ok_or(Error::SingularInformation)?;
    let x = chol.solve(v);
    let r = v.dot(&x);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::SingularInformation)
    }
}

pub fn lr_test(model: &RegressionModel, h: &Hypothesis, opts: &FitOptions) -> Result<TestResult> {
    Ok(NullFits::new(model, h, opts)?.lr())
}

pub fn wald_test(model: &RegressionModel, h: &Hypothesis, opts: &FitOptions) -> Result<TestResult> {
    NullFits::new(model, h, opts)?.wald()
}

pub fn score_test(
    model: &RegressionModel,
    h: &Hypothesis,
    information: Information,
    opts: &FitOptions,
) -> Result<TestResult> {
    NullFits::new(model, h, opts)?.score(information)
}

pub fn gradient_test(model: &RegressionModel, h: &Hypothesis, opts: &FitOptions) -> Result<TestResult> {
    NullFits::new(model, h, opts)?.gradient()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// `θ̂_j ± z_{(1+level)/2} se_j`.
pub fn confidence_intervals(fit: &FitResult, level: f64) -> Result<Vec<Interval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::DomainError(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let se = fit.standard_errors().ok_or(Error::SingularInformation)?;
    let z = special::normal_quantile(0.5 * (1.0 + level));
    Ok(fit
        .theta
        .to_vector()
        .iter()
        .zip(se)
        .map(|(&estimate, se)| Interval {
            estimate,
            se,
            lower: estimate - z * se,
            upper: estimate + z * se,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub aic: f64,
    pub bic: f64,
    pub aicc: f64,
}

/// AIC, BIC and AICc from a full log-likelihood with `p` estimated coefficients.
pub fn information_criteria(loglik: f64, n: usize, p: usize) -> Result<Criteria> {
    if n <= p + 1 {
        return Err(Error::DegenerateAicc { n, p });
    }
    let (nf, pf) = (n as f64, p as f64);
    let aic = -2.0 * loglik + 2.0 * pf;
    Ok(Criteria {
        aic,
        bic: -2.0 * loglik + pf * nf.ln(),
        aicc: aic + 2.0 * pf * (pf + 1.0) / (nf - pf - 1.0),
    })
}

/// Criteria for a fit, counting β and τ entries only.
pub fn fit_criteria(fit: &FitResult, n: usize) -> Result<Criteria> {
    information_criteria(fit.loglik, n, fit.n_params())
}
