//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or combination.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed input file (site CSV, config file).
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Inconsistent model state (e.g. a mobile with no candidate cells).
    #[error("model error: {0}")]
    Model(String),

    /// Solver produced non-finite values or failed to make progress.
    #[error("solver error at iteration {iter}: {msg}")]
    Solver { iter: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }
}
