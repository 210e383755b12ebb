use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge on [{lower}, {upper}]: error estimate {estimate:e} after {intervals} subintervals")]
    QuadratureNonConvergent {
        lower: f64,
        upper: f64,
        estimate: f64,
        intervals: usize,
    },

    #[error("effective potential has no interior maximum for R > 0")]
    BarrierNotFound,

    #[error("grid too narrow: relative edge amplitude {edge_amplitude:e} of state n = {level}")]
    GridTooNarrow { level: usize, edge_amplitude: f64 },

    #[error("banded linear solve failed: zero pivot at row {row}")]
    LinearSolveFailure { row: usize },

    #[error("norm grew by {growth:e} in a single non-dissipative step")]
    StabilityViolation { growth: f64 },

    #[error("thermal truncation insufficient: level {level} carries weight {weight:e}")]
    TruncationInsufficient { level: usize, weight: f64 },

    #[error("bounce shooting could not bracket a solution: {0}")]
    BracketingFailure(String),

    #[error("requested tolerance {0:e} unreachable")]
    ToleranceUnreachable(f64),

    #[error("effective potential never returns to zero beyond the barrier")]
    NoTurningPoint,

    #[error("minimum of the reduced action lies at the bracket endpoint sigma = {sigma}")]
    NoInteriorMinimum { sigma: f64 },

    #[error("Newton relaxation diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("linear boundary-value operator is numerically singular at row {row}")]
    SingularOperator { row: usize },

    #[error("invalid argument: {0}")]
    InvalidInput(String),

    #[error("line {line}: {key}: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
