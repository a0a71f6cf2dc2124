//! Command-line front-end: reads a TOML run config, runs one of the library
//! pipelines and writes CSV files carrying a provenance comment line.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Grid sweep over IT levels: boundary.csv and closure.csv.
    Sweep,
    /// Pairwise distributed updates: trajectory.csv.
    Distributed,
    /// Zero-forcing start and the P_c = 0 analytic point: special.csv.
    Special,
    /// Oracle cross-checks: verify.csv, exit code 3 on failure.
    Verify,
}

#[derive(Debug, Parser)]
#[command(
    name = "eepareto",
    version,
    about = "Energy-efficiency Pareto boundary of coordinated MISO beamforming"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output prefix: a directory (existing or ending in '/') or a file-name prefix.
    #[arg(long)]
    pub out: Option<String>,
    /// Overrides `scenario.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Runs `command` and returns the files written.
pub fn run(command: Command, config: &Path, out: Option<&str>, seed: Option<u64>) -> Result<Vec<PathBuf>, CliError> {
    let cfg = RunConfig::load(config, seed)?;
    match command {
        Command::Sweep => commands::sweep(&cfg, out),
        Command::Distributed => commands::distributed(&cfg, out),
        Command::Special => commands::special(&cfg, out),
        Command::Verify => commands::verify(&cfg, out),
    }
}
