use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by loading, distance computation, averaging and clustering.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: cannot parse {value:?} as a number")]
    Parse { path: PathBuf, line: usize, value: String },

    #[error("dataset {0:?} contains no series")]
    EmptyDataset(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cluster {0} has no members")]
    EmptyCluster(usize),

    #[error("clustering failed to converge: {0}")]
    Convergence(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(expected: usize, found: usize) -> Self {
        Error::Shape(format!("expected series of length {expected}, found {found}"))
    }
}
