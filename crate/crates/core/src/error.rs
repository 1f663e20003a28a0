use thiserror::Error;

/// Crate-wide error type. Configuration and input problems map to CLI exit code 1,
/// runtime numerical failures (overflow onto the boundary ring, non-finite values,
/// stalled flows) to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    /// Rejected configuration; the message names the violated guard.
    #[error("config: {0}")]
    Config(String),

    /// Operands live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Invalid field data handed to an operator.
    #[error("input: {0}")]
    Input(String),

    /// Probability reached the boundary ring; the periodic box no longer proxies the plane.
    #[error("boundary overflow at t={t}: ring amplitude is {ratio:.3e} of peak (limit {limit:.1e})")]
    BoundaryOverflow { t: f64, ratio: f64, limit: f64 },

    /// NaN or infinity appeared during time stepping.
    #[error("non-finite state at t={t} (step {step})")]
    NonFinite { t: f64, step: u64 },

    /// Gradient flow failed to reach the stopping rule.
    #[error("flow did not converge within {iters} iterations (last energy {energy:.12e})")]
    NoConvergence { iters: u64, energy: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BoundaryOverflow { .. } | Error::NonFinite { .. } | Error::NoConvergence { .. } => 2,
            _ => 1,
        }
    }
}
