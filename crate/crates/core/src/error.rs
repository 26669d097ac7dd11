use thiserror::Error;

/// Errors raised by the core numerics, models, and data pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch in `{name}`: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("missing parameter entry `{0}`")]
    MissingEntry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("target row {row} has zero norm; relative losses are undefined")]
    ZeroNormTarget { row: usize },

    #[error("requested {requested} POD modes but achievable rank is {rank}")]
    PodRank { requested: usize, rank: usize },

    #[error("solution blew up (norm {0:e}); time step too large")]
    BlowUp(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("unknown problem tag `{tag}`; supported: {supported}")]
    UnknownProblem { tag: String, supported: String },

    #[error("dataset format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
