use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by environment construction, simulation and benchmarking.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid configuration (dimensions, parameter ranges, unknown keys).
    #[error("configuration error: {0}")]
    Config(String),

    /// An action or input value that cannot be applied.
    #[error("invalid input: {0}")]
    Input(String),

    /// Non-finite values or integrator failure.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// API used out of order, e.g. stepping a finished episode.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// True for errors caused by the configuration rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
