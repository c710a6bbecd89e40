use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("partition weights must have a positive sum")]
    ZeroWeights,

    #[error("unpackable item: sku {sku} has weight {weight} above every package capacity")]
    UnpackableItem { sku: usize, weight: f64 },

    #[error("solution does not match instance: {0}")]
    ShapeMismatch(String),

    #[error("min-cost flow infeasible: {0}")]
    FlowInfeasible(String),

    #[error("profile values must be positive, got {0}")]
    NonPositiveValue(f64),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
