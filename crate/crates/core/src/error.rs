use thiserror::Error;

/// Errors raised by the selection toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input tables could not be joined.
    #[error("join error: {0}")]
    Join(String),

    /// A value failed validation (non-finite number, duplicate id, bad cell).
    #[error("validation error: {0}")]
    Validation(String),

    /// Column layout of an auxiliary table does not match what it refers to.
    #[error("schema error: {0}")]
    Schema(String),

    /// Invalid parameter or builder configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A learner could not be trained or applied.
    #[error("learner error: {0}")]
    Learner(String),

    /// An evaluation was requested on data the selector does not cover.
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

impl Error {
    /// True for errors caused by bad input data or configuration, as opposed
    /// to failures while running an experiment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Join(_) | Error::Validation(_) | Error::Schema(_) | Error::Config(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
