use thiserror::Error;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field length {len} does not match grid with {expected} nodes")]
    LengthMismatch { len: usize, expected: usize },
    #[error("boundary node {index} is not zero")]
    NonZeroBoundary { index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Pauli index must be 1, 2 or 3, got {0}")]
    PauliIndex(usize),
    #[error("invalid path request: {0}")]
    InvalidPath(String),
    #[error("coarsening factor {factor} does not divide {n_steps} steps")]
    NonDivisibleFactor { factor: usize, n_steps: usize },
    #[error("block pivot {row} is singular (|det| = {det_abs:e})")]
    SingularPivot { row: usize, det_abs: f64 },
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "fixed-point iteration did not converge after {iterations} iterations (update {update:e})"
    )]
    NonConvergence { iterations: usize, update: f64 },
    #[error("H1 norm {h1:e} exceeds guard radius {radius:e}")]
    GuardTriggered { h1: f64, radius: f64 },
    #[error("field mass {mass:e} exceeded overflow cap")]
    OverflowDetected { mass: f64 },
    #[error("zero denominator in relative error")]
    ZeroDenominator,
    #[error("error series invalid: {0}")]
    InvalidSeries(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
