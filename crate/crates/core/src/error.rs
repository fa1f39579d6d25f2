use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: lo = {lo} must be strictly below hi = {hi}")]
    InvalidDomain { lo: f64, hi: f64 },

    #[error("grid needs at least 2 subintervals, got {0}")]
    TooFewIntervals(usize),

    #[error("invalid problem at x = {x}, y = ({y1}, {y2}): {reason}")]
    InvalidProblem {
        x: f64,
        y1: f64,
        y2: f64,
        reason: String,
    },

    #[error("mixed cost derivative vanishes at x = {x}, y = ({y1}, {y2})")]
    DegenerateCost { x: f64, y1: f64, y2: f64 },

    #[error("singular pivot at row {0}")]
    SingularPivot(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported query: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
