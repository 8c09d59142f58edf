use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid membership function shape: {0}")]
    InvalidShape(String),

    #[error("invalid intuitionistic value <{mu}, {gamma}>")]
    InvalidValue { mu: f64, gamma: f64 },

    #[error("aggregation over an empty set of fuzzy sets")]
    EmptyAggregation,

    #[error("intuitionistic fuzzy set violates mu + gamma <= 1 at x = {x}")]
    InvalidResult { x: f64 },

    #[error("no sample has membership above non-membership; relation is indeterminate")]
    Indeterminate,

    #[error("unsupported linguistic partition size {0} (expected 3, 5 or 7)")]
    UnsupportedLevels(usize),

    #[error("value {value} lies outside the image of the transfer function")]
    OutOfImage { value: f64 },

    #[error("state and weights belong to different reasoning modes")]
    ModeMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
