use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum VaradeError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("data format error at row {row}, column {column}: {detail}")]
    Format {
        row: usize,
        column: String,
        detail: String,
    },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, VaradeError>;

impl VaradeError {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        VaradeError::Shape {
            op,
            detail: detail.into(),
        }
    }
}
