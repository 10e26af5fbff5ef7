use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid vector")]
    InvalidVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not a codeword")]
    NotACodeword,
    #[error("degenerate coefficient {coefficient} (multiple of {prime})")]
    DegenerateCoefficient { coefficient: i64, prime: u64 },
    #[error("non-invertible coefficient {coefficient} modulo {prime}")]
    NonInvertibleCoefficient { coefficient: i64, prime: u64 },
    #[error("enumeration bound exceeded: {required} tuples > bound {bound}")]
    EnumerationBoundExceeded { required: u128, bound: u128 },
    #[error("scale mismatch")]
    ScaleMismatch,
    #[error("half-duplex conflict at node {node}")]
    HalfDuplexConflict { node: usize },
    #[error("infeasible power pattern: {0}")]
    InfeasiblePattern(String),
}
