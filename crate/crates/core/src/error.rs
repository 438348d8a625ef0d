use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("capacity exceeded: dimension {requested} is above the cap of {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("parameter out of bounds: w[{index}] = {value} not in [{lo}, {hi}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("spectral gap closes at s = {s}: gap {gap:e} is within the degeneracy tolerance")]
    GapClosure { s: f64, gap: f64 },

    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),

    #[error("chain is reducible; the stationary distribution is not unique")]
    Reducible,

    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
