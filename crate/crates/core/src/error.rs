use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("negative probability {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("non-finite probability at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("phi is defined on [0, 1], got {0}")]
    DomainError(f64),

    #[error("every representation cluster is dead for instance {x}")]
    AllClustersDead { x: usize },

    #[error("instance index {index} outside alphabet of size {size}")]
    UnknownInstance { index: usize, size: usize },

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("enumeration of {needed} hypotheses exceeds budget {budget}")]
    EnumerationBudgetExceeded { needed: f64, budget: u64 },

    #[error("variances differ at dimension {dim}: {left} vs {right}")]
    CovarianceMismatch { dim: usize, left: f64, right: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("assignment of size {size} exceeds budget {max}")]
    AssignmentBudgetExceeded { size: usize, max: usize },

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
