//! Error type shared across the crate.

use std::path::PathBuf;

/// Errors surfaced by stream construction, learners and the bench runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar or structural argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A generator was asked for parameters outside its admissible regime.
    #[error("parameter regime violated: {0}")]
    RegimeViolation(String),

    /// Exhaustive enumeration would exceed the configured budget.
    #[error("enumeration budget exceeded: {actual} experts > {budget}")]
    BudgetExceeded { actual: u128, budget: u128 },

    /// Experiment configuration failed validation; `path` is the config
    /// field (e.g. `streams[0].sigma`).
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// I/O error with the offending file attached.
    #[error("io error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// CSV stream had no usable rows or a malformed row.
    #[error("csv error: {0}")]
    Csv(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
