use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HkError {
    #[error("profile must contain at least one opinion")]
    EmptyProfile,
    #[error("opinion {value} at position {index} is outside [0, 1]")]
    OpinionOutOfRange { index: usize, value: f64 },
    #[error("index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("agents {i} and {j} are not adjacent in the opinion graph")]
    NotAnEdge { i: usize, j: usize },
    #[error("length mismatch: {lambdas} coefficients but {xs} points")]
    LengthMismatch { lambdas: usize, xs: usize },
    #[error("coefficients must sum to zero (sum = {0:e})")]
    NonZeroSum(f64),
    #[error("{0}")]
    Domain(String),
    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),
}

pub type Result<T, E = HkError> = std::result::Result<T, E>;
