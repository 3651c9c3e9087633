use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid fiber parameters: {0}")]
    InvalidFiber(String),
    #[error("mode ({m}, {n}) belongs to group {group}, but only {guided} groups are guided")]
    Unguided {
        m: usize,
        n: usize,
        group: usize,
        guided: usize,
    },
    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("baseline intensity {0:e} is too small to divide by")]
    ZeroBaseline(f64),
    #[error("{0} is not a triangular number of modes; nearest valid values are {1} and {2}")]
    NotTriangular(usize, usize, usize),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
