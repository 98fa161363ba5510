use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("singular steady-state denominator (|d| = {0:e})")]
    SingularDenominator(f64),

    #[error("state is not a fixed point (residual {residual:e} exceeds {limit:e})")]
    NotAFixedPoint { residual: f64, limit: f64 },

    #[error("{0}")]
    Config(#[from] crate::io::ConfigError),

    #[error("invalid integration config: {0}")]
    InvalidConfig(String),

    #[error("trajectory diverged at t = {time}")]
    Diverged { time: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
