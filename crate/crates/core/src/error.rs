use thiserror::Error;

use crate::hazard_model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{what}: {value} is outside the admissible domain")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model failed validation: {0}")]
    Validation(ValidationReport),
    #[error("tilt rejected: {0}")]
    RejectedTilt(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver did not converge: {reason} (max residual {max_residual:e})")]
    NonConvergence { reason: String, max_residual: f64, residuals: Vec<f64> },
    #[error("simulation aborted: {0}")]
    Simulation(String),
}

pub(crate) fn check_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}
