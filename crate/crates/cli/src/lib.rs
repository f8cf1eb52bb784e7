//! `thermodyn` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error (nothing written), 2 data error
//! (artifacts written, see `diagnostics.json`).

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermodyn::HvacMode;

pub use config::{AnalysisFlags, Cohort, Format, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or input path. Exit code 1.
    Usage(String),
    /// The run went through but some data could not be used. Exit code 2.
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "thermodyn", version, about = "Occupant thermostat-override dynamics")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with planted ground truth.
    Synth(SynthArgs),
    /// Write conditioned per-home series.
    Condition(AnalysisFlags),
    /// Write the manual-setpoint-change feature table.
    Extract(AnalysisFlags),
    /// Write the population report, figure tables and quantile surface.
    Stats(AnalysisFlags),
    /// Fit the override law to a stored quantile surface.
    Fit(AnalysisFlags),
    /// Fraction of occupants overriding within a horizon.
    Predict(PredictArgs),
    /// Extract, stats and fit in one pass over a corpus.
    All(AnalysisFlags),
}

#[derive(Debug, Clone, clap::Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub homes: Option<usize>,
    #[arg(long)]
    pub days: Option<u32>,
    /// Perfect sensor and grid-aligned changes.
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Clone, clap::Args)]
pub struct PredictArgs {
    /// Signed degree of discomfort, °F.
    #[arg(long, allow_hyphen_values = true)]
    pub dod: f64,
    /// Minutes after the setpoint change.
    #[arg(long)]
    pub horizon: f64,
    /// `heat` or `cool`. Defaults to the mode in which this DoD increases energy use.
    #[arg(long)]
    pub mode: Option<HvacMode>,
    /// Read the empirical surface instead of the fitted model.
    #[arg(long)]
    pub empirical: bool,
}

/// Parses `args` and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    commands::dispatch(cli)
}

/// Process entry point: runs and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match commands::dispatch(cli) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        },
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{e}");
            ExitCode::from(1)
        }
    }
}
