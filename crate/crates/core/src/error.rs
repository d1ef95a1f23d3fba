use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for alphabet of size {size}")]
    Index { index: usize, size: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("precondition failed: {msg} (x_ids: {})", .x_ids.join(", "))]
    Precondition { msg: String, x_ids: Vec<String> },

    #[error("instance too large: {0}")]
    Size(String),

    /// Non-finite objective during optimization. Carries the last channel
    /// whose objective was finite.
    #[error("solver diverged at iteration {iteration}: {msg}")]
    Diverged {
        iteration: usize,
        msg: String,
        last_finite: Option<Box<crate::channel::Channel>>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
