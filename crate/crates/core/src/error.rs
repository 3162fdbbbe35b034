//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,
    #[error("sample is not sorted")]
    UnsortedSample,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid distortion: {0}")]
    InvalidDistortion(String),
    #[error("enumeration too large: exceeded {0} paths")]
    EnumerationTooLarge(u64),
    #[error("insufficient trajectories: need at least {need}, got {got}")]
    InsufficientTrajectories { need: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
