use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("weight r^{exponent} is not integrable at the origin")]
    Singularity { exponent: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("u = {value} lies outside the tabulated range [{lo}, {hi}]")]
    Extrapolation { value: f64, lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("existence precondition fails: {0}")]
    Existence(String),

    #[error("contract violation: {0}")]
    Contract(String),
}
