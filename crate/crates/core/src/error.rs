use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure in {context} (residual {residual:e})")]
    Numeric { context: String, residual: f64 },

    #[error("no fixed point: {0}")]
    NoFixedPoint(String),

    #[error("value {value} outside achievable range [{low}, {high}]")]
    Range { value: f64, low: f64, high: f64 },

    #[error("regime precondition violated: {0}")]
    Regime(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("lambda search failed after {rounds} region moves; trace {trace:?}")]
    SearchFailure { rounds: usize, trace: Vec<(f64, f64)> },

    #[error("iteration unstable: {0}")]
    Instability(String),

    #[error("design construction failed: {0}")]
    Design(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
