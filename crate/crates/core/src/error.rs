use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance is singular or not positive definite (pivot {pivot:e} at index {index})")]
    SingularMatrix { index: usize, pivot: f64 },

    #[error("invalid barrier: {0}")]
    InvalidBarrier(String),

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("no candidate index set passed the optimality conditions (ill-conditioned input)")]
    NoFeasibleSet,

    #[error("correlation {rho} outside ({lo}, 1) for dimension {dim}")]
    RhoOutOfRange { rho: f64, lo: f64, dim: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("all tilt components must be positive (got {0})")]
    NonPositiveLambda(f64),

    #[error("budget too small or too large: {0}")]
    BudgetTooSmall(String),

    #[error("operation requires the full index set, got |I| = {active} < d = {dim}")]
    PartialIndexSet { active: usize, dim: usize },

    #[error("bound probability {0:e} is below 1e-12; constant cannot be certified")]
    DegenerateBound(f64),

    #[error("invalid trend distribution: {0}")]
    InvalidTrend(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("split horizon {lambda} must be below u^2 = {u_sq}")]
    HorizonTooLarge { lambda: f64, u_sq: f64 },

    #[error("invalid step schedule: {0}")]
    ScheduleInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
