use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e}, tolerance {tolerance:e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("dimension {dim} exceeds the resource limit {limit} (raise QIG_MAX_DIM to allow it)")]
    ResourceLimit { dim: usize, limit: usize },

    #[error("parameter {name} = {value} is outside the model domain {domain}")]
    Domain {
        name: String,
        value: f64,
        domain: String,
    },

    #[error("unknown model {name:?}; registry contains: {available}")]
    ModelNotFound { name: String, available: String },

    #[error("tangent has a kernel-to-kernel component of size {0:e}")]
    InconsistentTangent(f64),

    #[error("Fisher metric is singular or ill-conditioned (condition number {0:e})")]
    SingularMetric(f64),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("frame vectors do not resolve the identity (deviation {0:e})")]
    InvalidFrame(f64),

    #[error("no locally unbiased observable tuple exists: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (best value {best})")]
    Convergence { best: f64, iterations: usize },

    #[error("operation requires {expected} parameters, model has {got}")]
    UnsupportedArity { expected: usize, got: usize },

    #[error("estimator is not locally unbiased (residual {0:e})")]
    NotLocallyUnbiased(f64),

    #[error("enumeration of {count} terms exceeds the limit {limit}; use monte-carlo mode")]
    EnumerationTooLarge { count: f64, limit: f64 },

    #[error("measurement search failed: {0}")]
    SearchFailed(String),

    #[error("likelihood is not finite at the initial point")]
    Initialization,
}

pub type Result<T> = core::result::Result<T, Error>;
