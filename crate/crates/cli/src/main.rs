//! `latticeway`: batch experiments on two-way relay line networks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use latticeway_cli::commands;
use latticeway_cli::config::{Command, ExperimentConfig, Format, Overrides};
use latticeway_cli::error::CliError;

/// Rates, simulations and lattice demos for two-way relay line networks.
#[derive(Debug, Parser)]
#[command(name = "latticeway", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials (sample count for `gap-check`).
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    blocks: Option<usize>,
    /// Lattice dimension n.
    #[arg(long)]
    dim: Option<usize>,
    /// Symmetric rate in bits per channel use.
    #[arg(long)]
    rate: Option<f64>,
    /// Same noise variance at every node.
    #[arg(long)]
    noise: Option<f64>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-block trace CSV destination.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("LATTICEWAY_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("LATTICEWAY_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Internal(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    cfg.apply(Overrides {
        seed: cli.seed,
        trials: cli.trials,
        blocks: cli.blocks,
        dim: cli.dim,
        out: cli.out,
        trace: cli.trace,
        format: cli.format,
        noise: cli.noise,
        rate: cli.rate,
    });
    let artifacts = commands::run(cli.command, &cfg)?;
    match &cfg.output.out {
        Some(path) => std::fs::write(path, &artifacts.main)?,
        None => print!("{}", artifacts.main),
    }
    if let (Some(path), Some(trace)) = (&cfg.output.trace, &artifacts.trace) {
        std::fs::write(path, trace)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
