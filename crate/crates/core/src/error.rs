use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("theta must lie in [0, 1], got {0}")]
    ThetaOutOfRange(f64),

    #[error("no BBM parameters satisfy the {0} constraints")]
    Infeasible(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("norm mode does not match field kind: {0}")]
    ModeMismatch(String),

    #[error("operation is undefined for the zero field")]
    ZeroField,

    #[error("invalid derivative orders: {0}")]
    InvalidOrder(String),

    #[error("non-cavitation violated: {0}")]
    CavitationViolation(String),

    #[error("coefficients or grid do not match the regime: {0}")]
    RegimeMismatch(String),

    #[error("mass-operator solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("non-finite values at t = {t}")]
    NonFinite { t: f64 },

    #[error("hypotheses violated: {}", .0.join("; "))]
    HypothesisViolation(Vec<String>),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
