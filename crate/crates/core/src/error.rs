use thiserror::Error;

/// Errors raised by the filtering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("state left the admissible domain after {retries} noise redraws: {node:?}")]
    DomainRetriesExhausted { node: Vec<f64>, retries: usize },

    #[error("state {0:?} is outside the model's admissible domain")]
    OutsideDomain(Vec<f64>),

    #[error("requested {requested} neighbors from an index of {available} nodes")]
    TooManyNeighbors { requested: usize, available: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("observation incompatible with cloud: every posterior value underflowed")]
    ObservationIncompatible,

    #[error("ensemble divergence: every particle weight underflowed")]
    EnsembleDivergence,

    #[error("innovation covariance is not invertible")]
    SingularInnovation,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, FilterError>;
