//! Config-driven runs of the level-set, continuation, center-bundle and
//! reaction-diffusion engines.

pub mod commands;
pub mod config;

use std::path::Path;

pub use commands::{cmd_centerbundle, cmd_continue, cmd_levelset, cmd_simulate, cmd_sweep, Outcome};
pub use config::Config;
use spiral_anchor::rd_sim::Preset;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<spiral_anchor::rd_sim::RdError> for CliError {
    fn from(e: spiral_anchor::rd_sim::RdError) -> Self {
        match e {
            spiral_anchor::rd_sim::RdError::Io(e) => CliError::Io(e),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Levelset,
    Continue,
    Simulate,
    Sweep,
    Centerbundle,
}

/// Loads `config` and runs `cmd` on `workers` threads (0: all cores).
pub fn run(cmd: Subcommand, config: &Path, out: &Path, preset: Preset, workers: usize) -> Result<Outcome, CliError> {
    let cfg = Config::load(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    pool.install(|| match cmd {
        Subcommand::Levelset => cmd_levelset(&cfg, out),
        Subcommand::Continue => cmd_continue(&cfg, out),
        Subcommand::Simulate => cmd_simulate(&cfg, out, preset),
        Subcommand::Sweep => cmd_sweep(&cfg, out, preset),
        Subcommand::Centerbundle => cmd_centerbundle(&cfg, out),
    })
}

/// Exit status of a finished or failed run.
pub fn exit_code(res: &Result<Outcome, CliError>) -> i32 {
    match res {
        Ok(o) if o.partial => EXIT_PARTIAL,
        Ok(_) => EXIT_OK,
        Err(e) => e.exit_code(),
    }
}
