//! Command-line front end: one declarative configuration drives the noise
//! budget, single runs, correlation analysis, and N-run sweeps.
//!
//! Exit codes: 0 success, 2 configuration error, 3 degenerate data,
//! 4 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optocorr::estimators::AccumulationMode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(optocorr::Error),
}

impl From<optocorr::Error> for CliError {
    fn from(e: optocorr::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                optocorr::Error::InvalidParams(_) | optocorr::Error::InvalidSpec(_) => 2,
                optocorr::Error::DegenerateData(_) | optocorr::Error::Format(_) => 3,
                optocorr::Error::Io(_) => 4,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "optocorr",
    version,
    about = "Simulator of radiation-pressure correlations between two beams on a moving-mirror cavity"
)]
struct Cli {
    /// Configuration file: TOML, or a JSON document written by a previous
    /// command to reproduce it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed override (defaults to the configured seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of runs for `sweep`.
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Override one configuration key, dotted path (repeatable), e.g.
    /// --set oscillator.mass_kg=1e-6
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Output root (default: config out_dir, then $OPTOCORR_OUT, then
    /// ./optocorr-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Accumulation mode for the primary sweep trace.
    #[arg(long, global = true, value_parser = clap::builder::ValueParser::new(parse_mode))]
    mode: Option<AccumulationMode>,

    #[command(subcommand)]
    command: Command,
}

fn parse_mode(s: &str) -> Result<AccumulationMode, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Print the radiation-to-thermal spectra ratio and the noise budget.
    Ratio,
    /// Run one seeded acquisition and write its run directory.
    Simulate,
    /// Correlation report and phase-space histograms for a stored run.
    Correlate {
        /// Directory written by `simulate`.
        run_dir: PathBuf,
    },
    /// Run N independent acquisitions and the running correlation estimate.
    Sweep,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let loaded = config::load(cli.config.as_deref(), &cli.set)?;
    let config = loaded.config;
    let rerun = loaded.rerun;

    let out_root = cli
        .out
        .or_else(|| config.out_dir.clone())
        .or_else(|| std::env::var_os("OPTOCORR_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("optocorr-out"));

    let seed = cli.seed.unwrap_or(config.seed);

    match cli.command {
        Command::Ratio => commands::cmd_ratio(&config, &out_root),
        Command::Simulate => commands::cmd_simulate(&config, seed, &out_root).map(|_| ()),
        Command::Correlate { run_dir } => commands::cmd_correlate(&run_dir),
        Command::Sweep => {
            let runs = cli
                .runs
                .or(rerun.as_ref().and_then(|r| r.runs))
                .unwrap_or(100);
            let mode = cli
                .mode
                .or(rerun.as_ref().and_then(|r| r.mode))
                .unwrap_or(AccumulationMode::Moments);
            commands::cmd_sweep(&config, seed, runs, mode, &out_root).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
