use thiserror::Error;

#[derive(Debug, Error)]
pub enum HomogError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("corrector solve for direction {direction} failed: {source}")]
    Direction {
        direction: usize,
        #[source]
        source: Box<HomogError>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{failed} of {total} realizations failed, exceeding the 1% budget")]
    FailureBudget { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, HomogError>;
