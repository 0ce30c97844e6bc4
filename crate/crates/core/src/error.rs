use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: schema error: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("window {window} out of range (horizon {horizon})")]
    WindowOutOfRange { window: usize, horizon: usize },

    #[error("no inactive users: correction factor undefined for alpha = {alpha}")]
    NoInactiveUsers { alpha: f64 },

    #[error(
        "ROC curve needs at least one positive and one negative label ({positives} positives, {negatives} negatives)"
    )]
    DegenerateLabels { positives: usize, negatives: usize },

    #[error("empty group")]
    EmptyGroup,

    #[error("user {user} activated with both peer and external probability zero")]
    ImpossibleActivation { user: usize },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
