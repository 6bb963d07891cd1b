//! Command-line front end for drivegym: closed-loop runs, seeded
//! benchmarks, reference export and trajectory plots.

pub mod args;
mod commands;
pub mod plot;
pub mod refcsv;

use std::fmt;

pub use commands::execute;

/// Failure class of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments or input files (exit code 1).
    Config(anyhow::Error),
    /// Simulation, numerical or I/O failure while running (exit code 2).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) | CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<drivegym::Error> for CliError {
    fn from(e: drivegym::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.into())
        } else {
            CliError::Runtime(e.into())
        }
    }
}
