use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("spectrum is not Hermitian: imaginary residue {residue:.3e} exceeds {limit:.3e}")]
    SymmetryViolation { residue: f64, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input must be mean-zero, got mass {mass:.3e}")]
    MeanNotZero { mass: f64 },

    #[error("solution diverged: max |u| = {linf:.3e} exceeds {threshold:.3e}")]
    Diverged { linf: f64, threshold: f64 },

    #[error(
        "stabilization exhausted after {retries} retries: kappa = {kappa}, \
         energy {energy_before} -> {energy_after}"
    )]
    KappaExhausted {
        kappa: f64,
        energy_before: f64,
        energy_after: f64,
        retries: usize,
    },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
