//! Command-line front end. Every command reads one TOML configuration,
//! applies flag overrides and writes CSV files into the output directory.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "polarosc",
    version,
    about = "Polarization self-rotation oscillator simulator"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a setting, e.g. `--set cavity.eta=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Replace `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replace `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotation angle against ellipticity.
    PsrCurve,
    /// Self-rotation slope and absorption against detuning.
    Spectrum,
    /// Repeated oscillation events and their helicity statistics.
    Bistability,
    /// Steady-state quadratures against roundtrip loss.
    LossSweep,
    /// Coupled-mode Ising search on an edge-list instance.
    Ising {
        /// Also compute the exact ground state by enumeration (N ≤ 24).
        #[arg(long)]
        oracle: bool,
    },
}

/// Parses arguments (including the program name) and runs the command,
/// returning the files written.
pub fn run<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let overrides = config::Overrides {
        set: cli.set.clone(),
        seed: cli.seed,
        out: cli.out.clone(),
    };
    let cfg = config::load(path, &overrides)?;
    match &cli.command {
        Command::PsrCurve => commands::psr_curve(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Bistability => commands::bistability(&cfg),
        Command::LossSweep => commands::loss_sweep(&cfg),
        Command::Ising { oracle } => commands::ising(&cfg, *oracle),
    }
}
