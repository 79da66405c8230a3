use thiserror::Error;

/// Errors surfaced by the detection library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no reference samples")]
    NoReferenceSamples,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite feature value at position {index}")]
    NonFiniteFeature { index: usize },

    #[error("invalid nonconformity score: {0}")]
    InvalidScore(f64),

    #[error("empty training scores")]
    EmptyTrainingScores,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
