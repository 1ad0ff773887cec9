use anyhow::{Context, Result};
use clap::Args;
use logsym::diagnostics::{qq_envelope, EnvelopeData, EnvelopeOptions, ResidualKind};
use logsym::parallel::{map_slice, Execution};
use serde::Serialize;

use crate::args::{Common, DataArgs, ModelArgs};
use crate::data::{ModelData, Table};
use crate::fit::fit_level;
use crate::output::{emit_csv, emit_json, num, CsvTable, Format};
use logsym::kernels::KernelFamily;

#[derive(Debug, Clone, Args)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Simulated datasets per envelope (at least 19).
    #[arg(long, default_value_t = 100)]
    pub sims: usize,
    /// Pointwise coverage of the band.
    #[arg(long, default_value_t = 0.95)]
    pub band: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelEnvelope {
    pub q: f64,
    pub family: Option<String>,
    pub envelopes: Vec<EnvelopeData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

const KINDS: [ResidualKind; 2] = [ResidualKind::Gcs, ResidualKind::Rq];

fn kind_name(k: ResidualKind) -> &'static str {
    match k {
        ResidualKind::Gcs => "gcs",
        ResidualKind::Rq => "rq",
    }
}

fn envelope_level(data: &ModelData, grid: &[KernelFamily], q: f64, opts: &EnvelopeOptions) -> LevelEnvelope {
    let result = fit_level(data, grid, q).and_then(|(model, fit)| {
        let envs = KINDS
            .iter()
            .map(|&k| qq_envelope(&model, &fit, k, opts).map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()?;
        Ok((fit.family.to_string(), envs))
    });
    match result {
        Ok((family, envelopes)) => LevelEnvelope {
            q,
            family: Some(family),
            envelopes,
            error: None,
        },
        Err(e) => LevelEnvelope {
            q,
            family: None,
            envelopes: Vec::new(),
            error: Some(format!("{e:#}")),
        },
    }
}

fn table(levels: &[LevelEnvelope]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "q",
        "family",
        "kind",
        "index",
        "residual",
        "theoretical",
        "lower",
        "upper",
    ]);
    for l in levels {
        let family = l.family.clone().unwrap_or_default();
        for e in &l.envelopes {
            for i in 0..e.ordered.len() {
                t.push(vec![
                    num(l.q),
                    family.clone(),
                    kind_name(e.kind).to_string(),
                    (i + 1).to_string(),
                    num(e.ordered[i]),
                    num(e.theoretical[i]),
                    num(e.lower[i]),
                    num(e.upper[i]),
                ]);
            }
        }
    }
    t
}

/// Returns the number of levels that failed.
pub fn run(args: &EnvelopeArgs) -> Result<usize> {
    let opts = EnvelopeOptions {
        sims: args.sims,
        band: args.band,
        seed: args.common.seed,
        execution: Execution::Parallel,
    };
    opts.validate()?;
    let grid = args.model.grid()?;
    let levels = args.model.levels()?;
    let data = Table::read(&args.data.data)?
        .model_data(
            &args.data.response,
            &args.data.quantile_covars,
            &args.data.dispersion_covars,
        )
        .with_context(|| format!("{}", args.data.data.display()))?;
    // The envelope refits already run in parallel.
    let results = map_slice(&levels, Execution::Sequential, |&q| {
        envelope_level(&data, &grid, q, &opts)
    });
    let out = args.common.out.as_deref();
    match args.common.format {
        Format::Json => emit_json(out, &results)?,
        Format::Csv => emit_csv(out, &table(&results), &[])?,
    }
    let failed: Vec<&LevelEnvelope> = results.iter().filter(|l| l.error.is_some()).collect();
    for l in &failed {
        eprintln!("error: q = {}: {}", l.q, l.error.as_deref().unwrap_or_default());
    }
    Ok(failed.len())
}
