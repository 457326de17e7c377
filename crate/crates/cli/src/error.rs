use std::fmt;

use ito_edgeworth::Error as CoreError;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// An invariant or check failed.
    Failure = 1,
    /// Unreadable or invalid configuration or input file.
    Parse = 2,
    /// A model or test function name or parameter does not resolve.
    Resolution = 3,
    /// The simulation hit a degenerate or non-finite quantity.
    Numeric = 4,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Parse, message: message.into() }
    }

    pub fn resolution(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Resolution, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Numeric, message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Failure, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }

    /// Classifies an engine error raised while running an experiment.
    pub fn from_core(err: CoreError) -> Self {
        match &err {
            CoreError::UnknownName { .. } | CoreError::InvalidParameter { .. } | CoreError::UnregisteredDerivative { .. } => {
                Self::resolution(err.to_string())
            }
            CoreError::GridTooLarge { .. } | CoreError::InvalidGrid(_) => Self::parse(format!("m: {err}")),
            CoreError::Estimation(_) => Self::parse(err.to_string()),
            CoreError::NonFinite(_)
            | CoreError::NonPositiveVariance(_)
            | CoreError::UnsupportedOrder(_)
            | CoreError::ModelEvaluation { .. }
            | CoreError::PathEvaluation { .. }
            | CoreError::DegenerateModel(_) => Self::numeric(err.to_string()),
        }
    }

    pub fn io(what: &str, err: std::io::Error) -> Self {
        Self::failure(format!("{what}: {err}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
