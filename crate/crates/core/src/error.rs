use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed its domain check.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("config {path}:{line}: {reason}")]
    ConfigParse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("hyp2f1({a}, {b}; {c}; {z}) did not converge after {terms} terms")]
    Hyp2f1NonConvergence {
        a: f64,
        b: f64,
        c: f64,
        z: f64,
        terms: usize,
    },

    #[error("quadrature did not reach tolerance: estimate {value:e}, error estimate {error:e} after {intervals} intervals")]
    QuadratureTolerance {
        value: f64,
        error: f64,
        intervals: usize,
    },

    /// Stacked channel matrix lost rank; the realization is unusable.
    #[error("channel matrix at BS {bs} is rank deficient (rank {rank} < {cols})")]
    RankDeficient { bs: usize, rank: usize, cols: usize },

    #[error("no base station fell inside the window after {attempts} attempts")]
    EmptyTopology { attempts: usize },

    #[error("{skipped} of {total} realizations were skipped (limit is 1%)")]
    TooManySkipped { skipped: usize, total: usize },

    #[error("evaluating operating point {point}: {source}")]
    AtOperatingPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than numerics.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Validation { .. }
            | Error::ConfigParse { .. }
            | Error::UnknownScenario { .. }
            | Error::Io { .. } => true,
            Error::AtOperatingPoint { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
