use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {op} got {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix data length {len} does not match shape {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric: |s[{i}][{j}] - s[{j}][{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown stream(s): {}", .0.join(", "))]
    UnknownStream(Vec<String>),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("csv row {row}, column {col}: {msg}")]
    Csv { row: usize, col: usize, msg: String },

    #[error("{0}")]
    Config(String),

    #[error("class '{0}' has a single sample; SMOTE needs at least two")]
    SingletonClass(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
