use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsimError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("capacitance matrix is not positive definite: leading minor {minor} = {value:e}")]
    NotPositiveDefinite { minor: usize, value: f64 },

    #[error("negative argument under square root for `{aggregate}` (value {value:e}); parameters are unphysical")]
    NegativeRadicand { aggregate: String, value: f64 },

    #[error("mode index {mode} out of range for a {modes}-mode space")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("Fock space mismatch: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid Fock space dimensions {dims:?}: every mode needs at least 2 levels")]
    InvalidDims { dims: Vec<usize> },

    #[error("invalid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("integrator step size underflow at t = {t:e} s (last good time)")]
    StepUnderflow { t: f64 },

    #[error("truncation not converged: max deviation {deviation:e} exceeds tolerance {tolerance:e} after raising every mode by 2 levels")]
    NotConverged { deviation: f64, tolerance: f64 },

    #[error("numerical conditioning error in {context}: {value:e}")]
    Conditioning { context: String, value: f64 },

    #[error("resolvent (M + i*omega) is singular at omega = {omega:e} rad/s")]
    SingularResolvent { omega: f64 },

    #[error("system is unstable: eigenvalue {re:e} + {im:e}i of the drift matrix has positive real part")]
    Unstable { re: f64, im: f64 },

    #[error("invalid time grid: {reason}")]
    InvalidGrid { reason: String },
}

pub type Result<T> = std::result::Result<T, QsimError>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> QsimError {
    QsimError::InvalidParam {
        field: field.to_string(),
        reason: reason.into(),
    }
}
