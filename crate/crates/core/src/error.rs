use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("tensor of shape {rows}x{cols} needs {expected} values, got {got}")]
    Length {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("backward root must be 1x1, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },

    #[error("loss is not finite when probing parameter {param} entry {index}")]
    NonFiniteProbe { param: usize, index: usize },

    #[error("non-finite gradient for layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("batch statistics undefined for an empty batch")]
    EmptyBatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("training diverged at step {step}: {what} is not finite")]
    Diverged { step: u64, what: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("grid has {cells} runs, over the budget of {budget}")]
    OverBudget { cells: usize, budget: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
