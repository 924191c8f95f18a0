use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the open unit disk")]
    OutsideDisk { x: f64, y: f64 },

    #[error("deck reduction did not reach the fundamental domain within {cap} moves")]
    ReductionFailed { cap: usize },

    #[error("surface group check failed: {0}")]
    InvalidGroup(String),

    #[error("conjugacy class is not hyperbolic (|trace| = {trace})")]
    NonHyperbolic { trace: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("base trajectory unusable: {0}")]
    BaseTrajectory(String),

    #[error("periodic boundary value problem unresolved: residual {residual:e} with {modes} samples")]
    BoundaryValue { residual: f64, modes: usize },

    #[error("field is not periodic along the orbit (mismatch {mismatch:e})")]
    Aperiodic { mismatch: f64 },

    #[error("orbit continuation failed at lambda = {lambda}: residual {residual:e}")]
    Continuation { lambda: f64, residual: f64 },

    #[error("continuation failed for lambda values {failed:?}")]
    PartialCurve { failed: Vec<f64> },

    #[error("degenerate field: A = {a:e} is not positive at 3 standard errors ({stderr:e})")]
    DegenerateField { a: f64, stderr: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
