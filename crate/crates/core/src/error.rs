use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("volatility sigma[{index}] = {value} must be strictly positive")]
    NonPositiveVolatility { index: usize, value: f64 },

    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    #[error("covariance matrix is not positive definite (pivot {pivot} = {value:e})")]
    SingularCovariance { pivot: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time {t} is not on the simulation grid")]
    TimeOffGrid { t: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("invalid fair randomization: {0}")]
    InvalidRandomization(String),

    #[error("denominator wealth is degenerate at zero: {0}")]
    DivisionDegenerate(String),

    #[error("finite-difference stencil leaves the positive domain at {coordinate} = {value}")]
    DomainViolation {
        coordinate: &'static str,
        value: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
