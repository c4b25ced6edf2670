use std::process::ExitCode;

use thiserror::Error;

/// CLI failure, split by exit code: 1 for bad input, 2 for failures while
/// running.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    pub fn io(context: &str, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{context}: {e}"))
    }
}

impl From<binharm::Error> for CliError {
    fn from(e: binharm::Error) -> Self {
        use binharm::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::InvalidCondition(_)
            | E::RampTooLong { .. }
            | E::NonIntegerDecimation { .. }
            | E::AboveNyquist { .. }
            | E::TargetUnreachable { .. }
            | E::MismatchedConditions(_)
            | E::Clipping { .. }
            | E::MalformedResults(_) => CliError::Validation(e.to_string()),
            E::LevelOutOfBounds { .. } | E::TrackTerminated | E::Io(_) | E::Json(_) | E::Wav(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}
