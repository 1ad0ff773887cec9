use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use logsym::diagnostics::Summary;
use logsym::inference::TestKind;
use logsym::montecarlo::{run_study1, run_study2, study1_dataset, study2_dataset, Study1Config, Study2Config};

use crate::args::{Common, FamilyArgs};
use crate::data::write_dataset;
use crate::output::{emit_csv, emit_json, num, CsvTable, Format};

#[derive(Debug, Clone, Args)]
pub struct EstimationArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Draw the covariates once and reuse them in every replication.
    #[arg(long)]
    pub fixed_design: bool,
    /// Skip refitting every candidate family.
    #[arg(long)]
    pub no_success_rates: bool,
    /// Write the simulated dataset of replication `--dump-rep` as CSV.
    #[arg(long)]
    pub dump_dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub dump_rep: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TestsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Number of slopes under test, 1 to 3.
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4", allow_hyphen_values = true)]
    pub deltas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub phi: f64,
    #[arg(long)]
    pub fixed_design: bool,
    /// Write the simulated dataset of replication `--dump-rep` at `--dump-delta` as CSV.
    #[arg(long)]
    pub dump_dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub dump_rep: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dump_delta: f64,
}

fn summary_row(kind: &str, s: &Summary) -> Vec<String> {
    vec![
        kind.to_string(),
        num(s.mean),
        num(s.median),
        num(s.sd),
        num(s.skewness),
        num(s.kurtosis),
    ]
}

pub fn run_estimation(args: &EstimationArgs) -> Result<()> {
    let mut cfg = Study1Config::new(args.family.single()?, args.q, args.n, args.reps, args.common.seed);
    cfg.fixed_design = args.fixed_design;
    cfg.success_rates = !args.no_success_rates;
    cfg.validate()?;
    if let Some(path) = &args.dump_dataset {
        if args.dump_rep >= args.reps {
            bail!("--dump-rep {} is not below --reps {}", args.dump_rep, args.reps);
        }
        let d = study1_dataset(&cfg, args.dump_rep)?;
        write_dataset(path, &d.y, &d.x, &d.w)?;
    }
    let rep = run_study1(&cfg)?;
    let out = args.common.out.as_deref();
    if args.common.format == Format::Json {
        return emit_json(out, &rep);
    }
    let family = cfg.family.to_string();
    let mut main = CsvTable::new(&["family", "q", "n", "parameter", "truth", "bias", "mse", "cp"]);
    for (name, s) in &rep.parameters {
        main.push(vec![
            family.clone(),
            num(cfg.q),
            cfg.n.to_string(),
            name.clone(),
            num(s.truth),
            num(s.bias),
            num(s.mse),
            num(s.cp),
        ]);
    }
    let mut residuals = CsvTable::new(&["residual", "mean", "median", "sd", "skewness", "kurtosis"]);
    residuals.push(summary_row("gcs", &rep.gcs));
    residuals.push(summary_row("rq", &rep.rq));
    let mut run = CsvTable::new(&["kept", "dropped", "aic", "bic", "aicc", "agreement"]);
    let rates = rep
        .success
        .map(|s| [s.aic, s.bic, s.aicc, s.agreement].map(num).to_vec())
        .unwrap_or_else(|| vec![String::new(); 4]);
    let mut row = vec![rep.kept.to_string(), rep.dropped.to_string()];
    row.extend(rates);
    run.push(row);
    emit_csv(out, &main, &[("residuals", residuals), ("run", run)])
}

pub fn run_tests(args: &TestsArgs) -> Result<()> {
    let mut cfg = Study2Config::new(
        args.family.single()?,
        args.q,
        args.n,
        args.reps,
        args.r,
        args.common.seed,
    );
    cfg.deltas = args.deltas.clone();
    cfg.alphas = args.alphas.clone();
    cfg.phi = args.phi;
    cfg.fixed_design = args.fixed_design;
    cfg.validate()?;
    if let Some(path) = &args.dump_dataset {
        if args.dump_rep >= args.reps {
            bail!("--dump-rep {} is not below --reps {}", args.dump_rep, args.reps);
        }
        let d = study2_dataset(&cfg, args.dump_delta, args.dump_rep)?;
        write_dataset(path, &d.y, &d.x, &d.w)?;
    }
    let rep = run_study2(&cfg)?;
    let out = args.common.out.as_deref();
    if args.common.format == Format::Json {
        return emit_json(out, &rep);
    }
    let position = |t: TestKind| cfg.tests.iter().position(|&k| k == t).expect("configured test");
    let mut main = CsvTable::new(&["delta", "test", "alpha", "rate", "kept", "dropped", "unavailable"]);
    for r in &rep.rates {
        let d = rep
            .per_delta
            .iter()
            .find(|d| d.delta == r.delta)
            .expect("every rate has its δ");
        main.push(vec![
            num(r.delta),
            r.test.label().to_string(),
            num(r.alpha),
            num(r.rate),
            d.kept.to_string(),
            d.dropped.to_string(),
            d.unavailable[position(r.test)].to_string(),
        ]);
    }
    let mut side = Vec::new();
    if cfg.deltas.contains(&0.0) {
        let mut headers = vec!["test".to_string()];
        headers.extend(cfg.alphas.iter().map(|a| format!("alpha_{a}")));
        let mut size = CsvTable::new(&headers);
        for &t in &cfg.tests {
            let mut row = vec![t.label().to_string()];
            row.extend(
                cfg.alphas
                    .iter()
                    .map(|&a| rep.rate(0.0, t, a).map(num).unwrap_or_default()),
            );
            size.push(row);
        }
        side.push(("size", size));
    }
    emit_csv(out, &main, &side)
}
