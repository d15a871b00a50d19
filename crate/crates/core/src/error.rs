//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model space: {0}")]
    InvalidSpace(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidFamily(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("evaluation at the pole r = 0 is undefined; use the limit path")]
    PoleEvaluation,

    #[error("field must be strictly positive (min {min:.6e} at r = {r:.6})")]
    NonPositiveField { min: f64, r: f64 },

    #[error("u must be positive, got {0:.6e}")]
    NonPositiveValue(f64),

    #[error("curvature lower bound requires k >= {required:.6e}, got k = {supplied:.6e}")]
    CurvatureBoundViolation { supplied: f64, required: f64 },

    #[error("operation requires m > n (got m = {m}, n = {n})")]
    RequiresMGreaterN { m: f64, n: usize },

    #[error("this check requires the closed spherical model")]
    RequiresClosedModel,

    #[error("curvature is not nonnegative on the domain (lower-bound constant k = {0:.6e})")]
    CurvatureNotNonnegative(f64),

    #[error("linear solve failed: near-zero pivot at row {0}")]
    SingularSystem(usize),

    #[error("Newton iteration did not converge after {iterations} iterations \
             (residual {residual:.3e}): {reason}")]
    NonConvergence {
        reason: String,
        residual: f64,
        iterations: usize,
    },

    #[error("positivity lost during Newton iteration: {0}")]
    PositivityLoss(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
