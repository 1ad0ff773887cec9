use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Args;
use logsym::diagnostics::{gcs_residuals, rq_residuals, Summary};
use logsym::inference::{fit_criteria, Criteria, Hypothesis, NullFits, TestKind};
use logsym::kernels::{DensityKernel, KernelFamily};
use logsym::parallel::{map_indexed, map_slice, Execution};
use logsym::regress::{FitOptions, FitResult, RegressionModel};
use serde::Serialize;

use crate::args::{Common, DataArgs, ModelArgs};
use crate::data::{ModelData, Table};
use crate::output::{emit_csv, emit_json, num, opt, CsvTable, Format};

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
}

pub const TESTS: [TestKind; 4] = [TestKind::Wald, TestKind::LR, TestKind::Score, TestKind::Gradient];

#[derive(Debug, Clone, Serialize)]
pub struct TestOutcome {
    pub test: &'static str,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub parameter: String,
    pub estimate: f64,
    pub se: Option<f64>,
    /// Tests of `H₀: coefficient = 0`.
    pub tests: Vec<TestOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileEntry {
    pub theta: Vec<f64>,
    pub loglik: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelFit {
    pub family: String,
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub criteria: Criteria,
    /// `exp(x̄ᵀβ̂)`, the fitted quantile at the covariate means.
    pub quantile_at_means: f64,
    pub coefficients: Vec<Coefficient>,
    pub gcs: Summary,
    pub rq: Summary,
    pub profile: Vec<ProfileEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelOutcome {
    pub q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<LevelFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Profile the grid at level `q` and return the converged model and fit.
pub fn fit_level(data: &ModelData, grid: &[KernelFamily], q: f64) -> Result<(RegressionModel, FitResult)> {
    let model = RegressionModel::new(
        &data.y,
        data.x.clone(),
        data.w.clone(),
        q,
        Arc::new(DensityKernel::new(grid[0])?),
    )?;
    let fit = model
        .profile_extra_parameter(grid, &FitOptions::default())?
        .require_converged()?;
    let model = if fit.family == grid[0] {
        model
    } else {
        model.with_kernel(Arc::new(DensityKernel::new(fit.family)?))?
    };
    Ok((model, fit))
}

fn coefficient_tests(model: &RegressionModel, fit: &FitResult, j: usize) -> Vec<TestOutcome> {
    let opts = FitOptions {
        execution: Execution::Sequential,
        ..FitOptions::default()
    };
    let nulls = Hypothesis::zeros(vec![j])
        .and_then(|h| NullFits::with_unrestricted(model, &h, fit.clone(), &opts))
        .ok();
    TESTS
        .iter()
        .map(|&kind| {
            let r = nulls.as_ref().and_then(|n| n.run(kind).ok());
            TestOutcome {
                test: kind.label(),
                statistic: r.map(|r| r.statistic),
                p_value: r.map(|r| r.p_value),
            }
        })
        .collect()
}

fn analyse(data: &ModelData, grid: &[KernelFamily], q: f64) -> Result<LevelFit> {
    let (model, fit) = fit_level(data, grid, q)?;
    let names: Vec<String> = data
        .x_names
        .iter()
        .map(|n| format!("beta:{n}"))
        .chain(data.w_names.iter().map(|n| format!("tau:{n}")))
        .collect();
    let est = fit.theta.to_vector();
    let se = fit.standard_errors();
    let tests = map_indexed(names.len(), Execution::Parallel, |j| coefficient_tests(&model, &fit, j));
    let coefficients = names
        .into_iter()
        .zip(tests)
        .enumerate()
        .map(|(j, (parameter, tests))| Coefficient {
            parameter,
            estimate: est[j],
            se: se.as_ref().map(|s| s[j]),
            tests,
        })
        .collect();
    let means = data.x.row_mean();
    Ok(LevelFit {
        family: fit.family.to_string(),
        theta: fit.family.extra(),
        loglik: fit.loglik,
        iterations: fit.iterations,
        criteria: fit_criteria(&fit, model.n())?,
        quantile_at_means: means
            .iter()
            .zip(fit.theta.beta.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .exp(),
        coefficients,
        gcs: gcs_residuals(&model, &fit)?.summary,
        rq: rq_residuals(&model, &fit)?.summary,
        profile: fit
            .profile
            .iter()
            .map(|p| ProfileEntry {
                theta: p.family.extra(),
                loglik: p.loglik,
            })
            .collect(),
    })
}

pub fn fit_all(data: &ModelData, grid: &[KernelFamily], levels: &[f64]) -> Vec<LevelOutcome> {
    map_slice(levels, Execution::Parallel, |&q| match analyse(data, grid, q) {
        Ok(fit) => LevelOutcome {
            q,
            fit: Some(fit),
            error: None,
        },
        Err(e) => LevelOutcome {
            q,
            fit: None,
            error: Some(format!("{e:#}")),
        },
    })
}

fn theta_cell(theta: &[f64]) -> String {
    theta.iter().map(|v| num(*v)).collect::<Vec<_>>().join(":")
}

fn tables(outcomes: &[LevelOutcome]) -> (CsvTable, CsvTable, CsvTable) {
    let mut main = CsvTable::new(&[
        "q",
        "family",
        "parameter",
        "estimate",
        "se",
        "wald",
        "wald_p",
        "lr",
        "lr_p",
        "score",
        "score_p",
        "gradient",
        "gradient_p",
    ]);
    let mut summary = CsvTable::new(&[
        "q",
        "family",
        "loglik",
        "aic",
        "bic",
        "aicc",
        "iterations",
        "quantile_at_means",
        "gcs_mean",
        "gcs_median",
        "gcs_sd",
        "rq_mean",
        "rq_median",
        "rq_sd",
        "error",
    ]);
    let mut profile = CsvTable::new(&["q", "family", "theta", "loglik"]);
    for o in outcomes {
        let Some(f) = &o.fit else {
            let mut row = vec![num(o.q)];
            row.extend(std::iter::repeat_n(String::new(), 13));
            row.push(o.error.clone().unwrap_or_default());
            summary.push(row);
            continue;
        };
        for c in &f.coefficients {
            let mut row = vec![
                num(o.q),
                f.family.clone(),
                c.parameter.clone(),
                num(c.estimate),
                opt(c.se),
            ];
            for t in &c.tests {
                row.push(opt(t.statistic));
                row.push(opt(t.p_value));
            }
            main.push(row);
        }
        summary.push(vec![
            num(o.q),
            f.family.clone(),
            num(f.loglik),
            num(f.criteria.aic),
            num(f.criteria.bic),
            num(f.criteria.aicc),
            f.iterations.to_string(),
            num(f.quantile_at_means),
            num(f.gcs.mean),
            num(f.gcs.median),
            num(f.gcs.sd),
            num(f.rq.mean),
            num(f.rq.median),
            num(f.rq.sd),
            String::new(),
        ]);
        for p in &f.profile {
            profile.push(vec![num(o.q), f.family.clone(), theta_cell(&p.theta), opt(p.loglik)]);
        }
    }
    (main, summary, profile)
}

/// Returns the number of levels that failed.
pub fn run(args: &FitArgs) -> Result<usize> {
    let grid = args.model.grid()?;
    let levels = args.model.levels()?;
    let table = Table::read(&args.data.data)?;
    let data = table
        .model_data(
            &args.data.response,
            &args.data.quantile_covars,
            &args.data.dispersion_covars,
        )
        .with_context(|| format!("{}", args.data.data.display()))?;
    let outcomes = fit_all(&data, &grid, &levels);
    let out = args.common.out.as_deref();
    match args.common.format {
        Format::Json => emit_json(out, &outcomes)?,
        Format::Csv => {
            let (main, summary, profile) = tables(&outcomes);
            emit_csv(out, &main, &[("summary", summary), ("profile", profile)])?;
        }
    }
    let failed: Vec<&LevelOutcome> = outcomes.iter().filter(|o| o.error.is_some()).collect();
    for o in &failed {
        eprintln!("error: q = {}: {}", o.q, o.error.as_deref().unwrap_or_default());
    }
    Ok(failed.len())
}
