use alloc::string::String;

/// Errors raised while building instances or running the algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point has no coordinates")]
    EmptyPoint,
    #[error("non-finite coordinate {value} at position {index}")]
    NonFiniteCoordinate { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("realization probability {0} is not in (0, 1]")]
    InvalidProbability(f64),
    #[error("total probability {0} exceeds 1")]
    TotalProbabilityExceeded(f64),
    #[error("weight {0} is not a positive finite number")]
    InvalidWeight(f64),
    #[error("node {0:?} has no realizations")]
    EmptyNode(String),
    #[error("center set is empty")]
    EmptyCenterSet,
    #[error("support set is empty")]
    EmptySupport,
    #[error("Weiszfeld iterate coincides with a support point")]
    CoincidentIterate,
    #[error("grid search supports at most 3 dimensions, got {0}")]
    DimensionTooLarge(usize),
    #[error("input is empty")]
    EmptyInput,
    #[error("no node has been pushed into the stream")]
    EmptyStream,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
