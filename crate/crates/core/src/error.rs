use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unequal series length at line {line}: expected {expected}, found {found}")]
    UnequalLength {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("missing value at line {line}")]
    MissingValues { line: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("incompatible datasets: {0}")]
    IncompatibleDatasets(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameter space is empty for series length {0}")]
    EmptyParameterSpace(usize),

    #[error("contract of {0:?} expired before the first ensemble member was built")]
    ContractTooSmall(std::time::Duration),

    #[error("checkpoint rejected: {0}")]
    CheckpointInvalid(String),

    #[error("word positions were not retained by the base transform")]
    PositionsUnavailable,

    #[error("no feature passed the selection threshold")]
    EmptyFeatureSpace,

    #[error("infeasible shape placement: {0}")]
    InfeasiblePlacement(String),

    #[error("statistics error: {0}")]
    Stats(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
