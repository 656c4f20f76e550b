//! Command-line front end: drift and variance sweeps over `lambda`, the
//! drift-peak search and the two-species sorting demo, each writing
//! plot-ready CSV with the resolved configuration embedded as a comment
//! header.

mod commands;
pub mod config;
mod csv;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{cmd_peak, cmd_sort_demo, cmd_sweep, cmd_variance};
pub use config::{RawConfig, RunConfig, CONFIG_KEYS};
pub use csv::{format_number, CsvTable};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "STOKES_DRIFT_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical accuracy failure: {0}")]
    Accuracy(String),
    #[error("Monte Carlo divergence: {0}")]
    Divergence(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Accuracy(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        use crate::Error::*;
        match e {
            Accuracy { .. } => CliError::Accuracy(e.to_string()),
            Divergence { .. } => CliError::Divergence(e.to_string()),
            InvalidParameter(_) | InvalidArgument(_) | UndefinedDirection => CliError::Usage(e.to_string()),
        }
    }
}

/// What a command should do with its result besides computing it.
#[derive(Debug, Clone, Default)]
pub struct OutputOptions {
    /// Destination file; `None` prints to stdout.
    pub path: Option<PathBuf>,
    /// Restrict the CSV to these columns, in this order.
    pub columns: Option<Vec<String>>,
}

/// Resolves configuration for `command` and runs it. Returns the text that
/// belongs on stdout.
pub fn execute(
    command: &str,
    config_text: Option<&str>,
    overrides: &[(String, String)],
    output: &OutputOptions,
) -> Result<String, CliError> {
    let raw = match config_text {
        Some(t) => RawConfig::parse(t)?,
        None => RawConfig::default(),
    };
    let resolved = raw.resolve(command, overrides)?;
    let cfg = RunConfig::from_map(&resolved)?;
    let header: Vec<String> = std::iter::once(format!("stokes-drift {command}"))
        .chain(resolved.iter().map(|(k, v)| format!("{k} = {v}")))
        .collect();
    match command {
        "sweep" => cmd_sweep(&cfg, &header, output),
        "variance" => cmd_variance(&cfg, &header, output),
        "peak" => cmd_peak(&cfg, &header, output),
        "sort" => cmd_sort_demo(&cfg, &header, output),
        other => Err(CliError::Usage(format!("unknown command '{other}'"))),
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (or rayon's default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--workers must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Splits `--key value` / `--key=value` pairs for configuration keys out of
/// an argument list, leaving everything else in place.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>), CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (config::normalize_key(n), Some(v.to_string())),
            None => (config::normalize_key(flag), None),
        };
        if !CONFIG_KEYS.contains(&name.as_str()) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| CliError::Usage(format!("--{name} needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((rest, overrides))
}
