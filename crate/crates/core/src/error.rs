use thiserror::Error;

use crate::ode::OdeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VzError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
    #[error("newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular jacobian at T = {t}, alpha = {alpha}")]
    SingularJacobian { t: f64, alpha: f64 },
    #[error("geodesic stopped at t = {t_stop} before the requested time {t}")]
    EarlyStop { t: f64, t_stop: f64 },
    #[error("no admissible solution found")]
    NotFound,
    #[error("refused: {0}")]
    Refused(String),
}

impl VzError {
    /// Whether the error comes from the numerics rather than from the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            VzError::Integration(_)
                | VzError::NoConvergence { .. }
                | VzError::SingularJacobian { .. }
                | VzError::EarlyStop { .. }
                | VzError::NotFound
        )
    }
}

pub type Result<T> = std::result::Result<T, VzError>;
