use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not positive definite (Cholesky pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("covariance matrix is ill-conditioned (condition number {condition:e} exceeds {limit:e})")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-positive price {price} for instrument `{instrument}` on {date}")]
    NonPositivePrice {
        instrument: String,
        date: String,
        price: f64,
    },

    #[error("instrument `{0}` has zero sample variance")]
    ZeroVariance(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("log-price overflow on path {path} at step {step}")]
    Overflow { path: usize, step: usize },

    #[error("every run ended in ruin: {0}")]
    Ruined(String),

    #[error("fund returns are not invertible: {0}")]
    NotInvertible(String),

    #[error("parse error in {file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: u64,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front-end.
    ///
    /// `2` parse/usage, `3` numeric domain, `4` I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Config(_) => 2,
            Error::Io { .. } => 4,
            Error::DimensionMismatch { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::IllConditioned { .. }
            | Error::InvalidCorrelation(_)
            | Error::InvalidParameter { .. }
            | Error::NonPositivePrice { .. }
            | Error::ZeroVariance(_)
            | Error::InsufficientData(_)
            | Error::Overflow { .. }
            | Error::Ruined(_)
            | Error::NotInvertible(_) => 3,
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
