use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("flow breakdown at t = {t}: mean curvature {h} at node {node}")]
    FlowBreakdown { t: f64, node: usize, h: f64 },

    #[error("step rejected at t = {t} (dt = {dt}): {reason}; retry with a smaller dt")]
    StepRejected { t: f64, dt: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("profile not converged: Cauchy diagnostic {diagnostic:e} exceeds tolerance {tolerance:e}")]
    NotConverged { diagnostic: f64, tolerance: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
