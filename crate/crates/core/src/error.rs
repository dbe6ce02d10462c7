use thiserror::Error;

/// Errors raised by sketching, recovery and privacy operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {row}: expected {expected} columns, got {got}")]
    RowDimension { row: u64, expected: usize, got: usize },

    #[error("unsupported feature map kind {kind} for {operation}")]
    UnsupportedKind {
        kind: &'static str,
        operation: &'static str,
    },

    #[error("incompatible sketches: feature map fingerprints differ")]
    IncompatibleSketch,

    #[error("sketch is sealed by a privacy mechanism and cannot be modified")]
    SealedSketch,

    #[error("cannot delete from an empty sketch")]
    EmptySketch,

    #[error("sample count overflow")]
    CountOverflow,

    #[error("format error: {0}")]
    Format(String),

    #[error("ill-conditioned system (condition number {cond:.3e}); consider a ridge term")]
    IllConditioned { cond: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
