mod commands;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use txconfirm_core::{AnalysisError, ChainError};

use crate::commands::ValidationFailed;
use crate::config::{ModelArgs, UsageError};

/// Mean transaction-confirmation times for a blockchain modeled as a
/// batch-service priority queue.
#[derive(Debug, Parser)]
#[command(name = "txconfirm", version)]
struct Cli {
    #[command(flatten)]
    model: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean confirmation time for one arrival rate, optionally per class.
    Analyze(commands::AnalyzeArgs),
    /// Mean confirmation times over an arrival-rate grid, as CSV.
    Sweep(commands::SweepArgs),
    /// Reproduce the reference table and cross-check the analysis by simulation.
    Validate(commands::ValidateArgs),
    /// Simulate the priority queue and report per-class confidence intervals.
    #[command(alias = "simulate")]
    Estimate(commands::EstimateArgs),
    /// Statistics over block and transaction CSV exports.
    Stats(commands::StatsArgs),
    /// Mining race minimum versus its exponential limit.
    Mining(commands::MiningArgs),
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::Mining(a) => commands::mining(a),
        other => {
            let model = cli.model.resolve()?;
            match other {
                Command::Analyze(a) => commands::analyze(&model, a),
                Command::Sweep(a) => commands::sweep(&model, a),
                Command::Validate(a) => commands::validate(&model, a),
                Command::Estimate(a) => commands::estimate(&model, a),
                Command::Stats(_) | Command::Mining(_) => unreachable!(),
            }
        }
    }
}

/// 1 validation failure, 2 usage, 3 instability, 4 numerical failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if cause.is::<ValidationFailed>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<AnalysisError>() {
            return match e {
                AnalysisError::Unstable { .. } | AnalysisError::UnstableClass { .. } => 3,
                AnalysisError::InvalidParameter(_) | AnalysisError::EmptyInput(_) => 2,
                AnalysisError::TooFewReplications { .. } => 1,
                AnalysisError::Pole(_)
                | AnalysisError::NonConvergence { .. }
                | AnalysisError::RootCollision { .. }
                | AnalysisError::IllConditioned { .. }
                | AnalysisError::PgfPole { .. } => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<ChainError>() {
            return match e {
                ChainError::Io { .. } | ChainError::InvalidParameter(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
