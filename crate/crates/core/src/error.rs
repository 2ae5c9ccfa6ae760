use thiserror::Error;

/// Errors produced by model construction, the estimators and the oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The model fails `rho(|R|) < 1 - margin` and the caller did not force.
    #[error("model is not walk-summable: rho(|R|) = {rho:.12}")]
    NotWalkSummable { rho: f64 },

    /// A quantity that walk-summability keeps positive became non-positive.
    #[error("walk-summability violated: {0}")]
    WalkSummabilityViolation(String),

    #[error("belief propagation did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("resource budget exceeded: {what} (limit {limit})")]
    Budget { what: String, limit: usize },

    #[error("singular matrix")]
    Singular,

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An orbit weight with modulus >= 1, where the orbit factor is undefined.
    #[error("orbit weight {0} outside (-1, 1)")]
    Domain(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotWalkSummable { .. } | Error::WalkSummabilityViolation(_) => 3,
            Error::NotConverged { .. } => 4,
            Error::Budget { .. } => 5,
            _ => 1,
        }
    }
}
