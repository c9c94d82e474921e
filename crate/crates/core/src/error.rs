use std::io;

use thiserror::Error;

/// Errors raised by oracles, estimators, solvers and data loading.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("stochastic oracle evaluated without a sample")]
    MissingSample,

    #[error("deterministic oracle evaluated with a sample")]
    UnexpectedSample,

    #[error("the feasible set has no linear minimization oracle (unconstrained domain)")]
    NoLinearMinimizationOracle,

    #[error("incompatible configuration: {0}")]
    Config(String),

    #[error("objective returned a non-finite value at oracle call {call}")]
    NonFinite { call: u64 },

    #[error("label {label} is not in {{-1, +1}}")]
    InvalidLabel { label: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no rows")]
    NoRows,

    #[error("inadmissible recursion: {0}")]
    Inadmissible(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}
