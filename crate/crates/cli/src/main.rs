// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod data;
mod envelope;
mod fit;
mod output;
mod sim;

use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "logsym",
    version,
    about = "Quantile regression with log-symmetric response distributions"
)]
struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true, env = "LOGSYM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the model to a CSV dataset at one or more quantile levels.
    Fit(fit::FitArgs),
    /// Simulated QQ envelopes of GCS and RQ residuals.
    Envelope(envelope::EnvelopeArgs),
    /// Monte Carlo bias, MSE and coverage of the estimators.
    SimEstimation(sim::EstimationArgs),
    /// Monte Carlo size and power of the tests.
    SimTests(sim::TestsArgs),
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let failed = match &cli.command {
        Command::Fit(a) => fit::run(a)?,
        Command::Envelope(a) => envelope::run(a)?,
        Command::SimEstimation(a) => {
            sim::run_estimation(a)?;
            0
        }
        Command::SimTests(a) => {
            sim::run_tests(a)?;
            0
        }
    };
    if failed > 0 {
        bail!("{failed} quantile level(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
