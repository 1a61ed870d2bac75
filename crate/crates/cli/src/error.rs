use std::process::ExitCode;

use thiserror::Error;

use vidlink_core::packet::capture::CaptureError;
use vidlink_core::stream::StreamError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation: missing inputs, conflicting flags.
    #[error("{0}")]
    Usage(String),
    /// Invalid configuration or file system trouble.
    #[error("{0}")]
    Validation(String),
    /// Bytes on the wire or in a capture did not follow the protocol.
    #[error("{0}")]
    Protocol(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Protocol(_) => 3,
        })
    }
}

pub fn io_error(context: impl std::fmt::Display, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{context}: {e}"))
}

impl From<CaptureError> for CliError {
    fn from(e: CaptureError) -> Self {
        match e {
            CaptureError::Io(e) => CliError::Validation(e.to_string()),
            other => CliError::Protocol(other.to_string()),
        }
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        match e {
            StreamError::GeometryMismatch { .. } | StreamError::InvalidParameter(_) | StreamError::FramePrep(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Protocol(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
