use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a type or operation invariant.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// The input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sampling rate too low for the frequencies it has to carry.
    #[error("aliasing: sample rate {rate_hz} Hz must exceed 2 x {max_freq_hz} Hz")]
    Aliasing { rate_hz: f64, max_freq_hz: f64 },

    /// The requested model fit has no finite solution for the given target.
    #[error("no fit: {0}")]
    NoFit(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// `3` for a failed fit, `1` for I/O trouble and `2` for every other
    /// validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoFit(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

/// Rejects anything that is not a finite, strictly positive number.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}
