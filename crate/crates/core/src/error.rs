use thiserror::Error;

/// Errors raised by the estimation library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("NaN is not a valid input")]
    NaN,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown aggregator `{0}`")]
    UnknownAggregator(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("corruption pattern `{pattern}` cannot be applied at the {stage} stage")]
    StageMismatch {
        pattern: &'static str,
        stage: &'static str,
    },

    #[error("covariance matrix is not positive semidefinite")]
    NotPositiveSemidefinite,

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
