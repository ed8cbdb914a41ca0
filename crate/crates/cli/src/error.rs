use std::fmt::Display;

/// Failure of a CLI command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or input data; exit status 1.
    #[error("{0}")]
    Invalid(String),
    /// Failure while running an experiment or writing results; exit status 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn invalid(msg: impl Display) -> Self {
        CliError::Invalid(msg.to_string())
    }

    pub fn runtime(msg: impl Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches context to a toolkit error, keeping its validation/runtime class.
pub(crate) fn core(context: impl Display) -> impl FnOnce(asel::Error) -> CliError {
    move |e| {
        let msg = format!("{context}: {e}");
        if e.is_validation() {
            CliError::Invalid(msg)
        } else {
            CliError::Runtime(msg)
        }
    }
}
