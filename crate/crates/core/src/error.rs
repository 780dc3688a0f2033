use thiserror::Error;

/// Errors raised by the tensor-train, search and problem layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range for layer {layer} with {size} entries")]
    IndexOutOfRange { layer: usize, index: usize, size: usize },

    #[error("value {value} outside grid range [{lo}, {hi}] in dimension {dim}")]
    OutOfDomain { dim: usize, value: f64, lo: f64, hi: f64 },

    #[error("suffix cache does not match the tensor train it is queried with")]
    StaleCache,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid core: {0}")]
    InvalidCore(String),

    #[error("dense tensor with {entries} entries exceeds the limit of {limit}")]
    SizeLimit { entries: u128, limit: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible grid: {0}")]
    InfeasibleGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incompatible solver: {0}")]
    Incompatible(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
