use thiserror::Error;

pub type Result<T> = std::result::Result<T, RheoError>;

#[derive(Debug, Error)]
pub enum RheoError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("{what} is unavailable for `{kind}`")]
    Unavailable { kind: String, what: &'static str },

    #[error("not a graph point: residual {residual:e} exceeds tolerance {tol:e}")]
    NotGraphPoint { residual: f64, tol: f64 },

    #[error("resolvent did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eps = {0} must lie strictly inside (0, 1)")]
    EpsOutOfRange(f64),

    #[error("could not bracket the scalar root (last bound {0:e})")]
    BracketFailure(f64),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resolvent failed at {location}: {source}")]
    Cell {
        location: String,
        #[source]
        source: Box<RheoError>,
    },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RheoError {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        RheoError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// Whether the error stems from bad input (files, flags, parameters)
    /// rather than from a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            RheoError::Parse { .. }
                | RheoError::Config(_)
                | RheoError::InvalidParameter { .. }
                | RheoError::UnsupportedDimension(_)
                | RheoError::Unavailable { .. }
                | RheoError::EpsOutOfRange(_)
                | RheoError::Io(_)
                | RheoError::Json(_)
        )
    }
}
