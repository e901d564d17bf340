use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("no events observed in any group")]
    NoEvents,

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid contrast: {0}")]
    InvalidContrast(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expected {expected} multipliers, got {got}")]
    MultiplierCount { expected: usize, got: usize },

    #[error("censoring target {target} unreachable for {law}")]
    UnreachableCensoring { target: f64, law: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
