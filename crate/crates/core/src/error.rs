use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),

    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),

    #[error("no rows survived ingestion ({dropped} dropped)")]
    NoRows { dropped: usize },

    #[error("column {name:?} has length {len}, expected {expected}")]
    LengthMismatch { name: String, len: usize, expected: usize },

    #[error("column {0:?} contains non-finite values")]
    NonFinite(String),

    #[error("constant column {0:?}")]
    ConstantColumn(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("MSAE undefined for non-positive target mean")]
    NonPositiveMean,

    #[error("need at least {needed} features, got {got}")]
    TooFewFeatures { needed: usize, got: usize },

    #[error("need more rows ({rows}) than columns ({cols})")]
    TooFewRows { rows: usize, cols: usize },

    #[error("eigendecomposition did not converge after {0} sweeps")]
    NotConverged(usize),

    #[error("exact Shapley enumeration supports at most {cap} features, got {got}")]
    TooManyFeatures { got: usize, cap: usize },

    #[error("internal node has zero cover")]
    ZeroCover,

    #[error("invalid distance matrix: {0}")]
    InvalidDistance(String),

    #[error("treatment has no residual variation")]
    NoResidualVariation,

    #[error("empty hyperparameter grid")]
    EmptyGrid,

    #[error("invalid causal model: {0}")]
    InvalidScm(String),

    #[error("unsupported model document: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
