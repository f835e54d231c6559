use thiserror::Error;

/// Errors raised by the filter, operator and certificate machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rational literal `{0}`")]
    ParseRat(String),
    #[error("interval [{start}, {end}) has end before start")]
    InvertedInterval { start: String, end: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("set is not aligned with a grid of {cells} cells")]
    Misaligned { cells: usize },
    #[error("invalid multiplicity chain: {0}")]
    InvalidChain(String),
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resolution too coarse: {0}")]
    Resolution(String),
    #[error("grid mismatch: expected {expected} cells, got {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("not a filter: max filter-equation residual {residual:e} exceeds {tolerance:e}")]
    NotAFilter { residual: f64, tolerance: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
