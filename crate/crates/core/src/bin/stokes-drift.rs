use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stokes_drift::cli::{self, CliError, OutputOptions};

/// Stochastic Stokes' drift: asymptotic sweeps, Monte Carlo checks and the
/// particle sorting demo.
///
/// Any configuration key can also be given as a flag, e.g. `--epsilon 0.5`
/// or `--lambda-min=0.1`; flags override the config file.
#[derive(Parser)]
#[command(name = "stokes-drift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drift velocity against lambda (CSV).
    Sweep(Common),
    /// Eddy-model variance rate against lambda (CSV).
    Variance(Common),
    /// Locate the lambda maximising the drift.
    Peak(Common),
    /// Two-species sorting demo in a planar multi-wave field (CSV).
    SortDemo(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file with optional [sweep]/[variance]/[peak]/[sort] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated subset of CSV columns to keep.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Maximum number of worker threads. Results do not depend on it.
    #[arg(long, env = cli::WORKERS_ENV)]
    workers: Option<usize>,
}

fn run() -> Result<String, CliError> {
    let (args, overrides) = cli::extract_overrides(std::env::args().collect())?;
    let parsed = Cli::try_parse_from(args).map_err(|e| {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            e.exit()
        }
        CliError::Usage(e.to_string())
    })?;
    let (name, common) = match parsed.command {
        Command::Sweep(c) => ("sweep", c),
        Command::Variance(c) => ("variance", c),
        Command::Peak(c) => ("peak", c),
        Command::SortDemo(c) => ("sort", c),
    };
    let text = match &common.config {
        Some(p) => Some(std::fs::read_to_string(p)?),
        None => None,
    };
    let output = OutputOptions {
        path: common.output,
        columns: common.columns,
    };
    cli::with_workers(common.workers, || {
        cli::execute(name, text.as_deref(), &overrides, &output)
    })?
}

fn main() -> ExitCode {
    match run() {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("stokes-drift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
