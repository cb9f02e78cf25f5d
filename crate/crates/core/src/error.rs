use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error(
        "stratum (label {label}, group `{group}`) has {size} row(s), at least {required} required"
    )]
    StratumTooSmall {
        label: u8,
        group: String,
        size: usize,
        required: usize,
    },

    #[error("column `{0}` has no observed values")]
    EmptyColumn(String),

    #[error("column mismatch: {0}")]
    ColumnMismatch(String),

    #[error("class {0} has no training rows")]
    EmptyClass(u8),

    #[error("non-finite feature value at index {0}")]
    NonFinite(usize),

    #[error("blending coefficient has not been set")]
    AlphaUnset,

    #[error("no rows for the {role} group `{name}`")]
    MissingGroup { role: &'static str, name: String },

    #[error("model record: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
