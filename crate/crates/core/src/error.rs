use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index:?} out of range for dimension {dim}")]
    IndexOutOfRange { index: Vec<usize>, dim: usize },

    #[error("malformed tensor: {0}")]
    Structural(String),

    #[error("no positive mass: cannot project onto the probability simplex")]
    NoPositiveMass,

    #[error("not a probability vector: {0}")]
    NotProbVector(String),

    #[error("tensor is not column-stochastic ({count} violations, first: {first})")]
    NotStochastic { count: usize, first: String },

    #[error("too large for exact delta_m: n = {dim}, m = {order}")]
    TooLarge { order: usize, dim: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigenvalue computation failed at iteration {iteration}")]
    Eigen { iteration: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
