use thiserror::Error;

pub type Result<T> = std::result::Result<T, LassError>;

#[derive(Debug, Error)]
pub enum LassError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cholesky fill ratio {fill_ratio:.2} exceeds cap {cap:.2}; use the conjugate-gradient backend")]
    FillBudgetExceeded { fill_ratio: f64, cap: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigenvalue estimation did not converge after {iterations} iterations (sigma_min ~ {sigma_min:e}, sigma_max ~ {sigma_max:e})")]
    EigenNotConverged {
        iterations: usize,
        sigma_min: f64,
        sigma_max: f64,
    },

    #[error("component {component} has no labeled item; the harmonic system is singular")]
    UnlabeledComponent { component: usize },

    #[error("assignment row {row} is infeasible: {reason}")]
    Infeasible { row: usize, reason: String },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LassError {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        LassError::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LassError::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        LassError::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
