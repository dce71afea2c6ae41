use std::fmt;
use std::path::Path;

use qnir::QnirError;

pub const EXIT_MISSING_INPUT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn missing(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            code: EXIT_MISSING_INPUT,
            message: format!("cannot read {}: {err}", path.display()),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_COMPUTATION,
            message: format!("cannot write {}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<QnirError> for CliError {
    fn from(e: QnirError) -> Self {
        let code = match e {
            QnirError::QubitOutOfRange { .. }
            | QnirError::TooManyQubits { .. }
            | QnirError::InvalidProbability(_)
            | QnirError::InvalidConfig(_)
            | QnirError::LengthMismatch { .. }
            | QnirError::Json(_)
            | QnirError::Csv(_) => EXIT_USAGE,
            QnirError::Io(_)
            | QnirError::NotTracePreserving { .. }
            | QnirError::DegenerateMetric(_)
            | QnirError::Divergence { .. }
            | QnirError::NoFiniteCost => EXIT_COMPUTATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
