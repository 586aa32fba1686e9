use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("feature arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("fold count {k} out of range for {n} samples (need 2 <= k <= n)")]
    FoldCount { k: usize, n: usize },

    #[error("no data in {0}")]
    NoData(PathBuf),

    #[error("malformed header in {path}: expected `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("row {row}: {message}")]
    Row { row: u64, message: String },

    #[error("training set contains a single class; margin problem is undefined")]
    SingleClass,

    #[error("gradient descent diverged at epoch {epoch}: cost rose after {halvings} step halvings")]
    Divergence { epoch: usize, halvings: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("both classes are required, found only label {0}")]
    OneClassLabels(u8),

    #[error("{0}")]
    Oracle(String),

    #[error("unsupported model format: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from model fitting rather than from input data.
    pub fn is_training_failure(&self) -> bool {
        match self {
            Error::SingleClass | Error::Divergence { .. } => true,
            Error::Fold { source, .. } => source.is_training_failure(),
            _ => false,
        }
    }
}
