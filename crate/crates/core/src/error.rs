use thiserror::Error;

/// Failures raised by the solvers and parsers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("u = {u} is outside the tabulated range [{lo}, {hi}]")]
    Extrapolation { u: f64, lo: f64, hi: f64 },

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("step size underflow at r = {radius}")]
    Stiffness { radius: f64 },

    #[error("no sign change in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
        history: Vec<f64>,
    },

    #[error("undefined bound: {0}")]
    UndefinedBound(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("no fold: {0}")]
    NoFold(String),

    #[error("singular linear system: {0}")]
    LinearSolve(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        field,
        reason: reason.into(),
    }
}
