use thiserror::Error;

/// Crate-wide error type. Variants correspond to the failure categories the
/// public operations are allowed to produce; the CLI maps all of them to a
/// nonzero exit with the message below.
#[derive(Debug, Error)]
pub enum SwError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("placement error: {0}")]
    Placement(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),
    #[error("internal consistency violation: {0}")]
    Internal(String),
    #[error("observer '{name}' failed at sweep {step}: {source}")]
    Observer {
        name: String,
        step: u64,
        #[source]
        source: Box<SwError>,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SwError>;
