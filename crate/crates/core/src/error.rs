use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by tensor construction, solvers and predicates.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("data length {got} does not match ambient dimension {expected}")]
    DataLength { expected: usize, got: usize },
    #[error("entry {value} is negative but the tensor is flagged nonnegative")]
    NegativeEntry { value: f64 },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("term {0} is zero")]
    ZeroTerm(usize),
    #[error("term counts differ: {left} vs {right}")]
    TermCountMismatch { left: usize, right: usize },
    #[error("rank must be at least 1")]
    InvalidRank,
    #[error("tensor is not flagged nonnegative")]
    NotNonnegative,
    #[error("decomposition must be in nonnegative mode")]
    NotNonnegativeMode,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
