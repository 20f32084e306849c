use thiserror::Error;

/// Errors raised by the sampling, moment, spectrum and harness routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("orthogonal complement of a vector in dimension 1 is empty")]
    EmptyOrthocomplement,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("test function is not confined to a single eigenspace of the averaging operator")]
    DecompositionUnsupported,

    #[error("test function has zero variance")]
    DegenerateVariance,

    #[error("region measure unavailable: {0}")]
    MeasureUnavailable(&'static str),

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidDimension {
            dim,
            reason: "dimension must be at least 1",
        })
    } else {
        Ok(())
    }
}
