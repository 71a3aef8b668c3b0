use std::path::PathBuf;

/// Errors raised by the simulation library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {origin}: {message}")]
    Parse { origin: String, message: String },

    /// A structural problem with a feeder network; `element` names the offender.
    #[error("invalid feeder element `{element}`: {message}")]
    Validation { element: String, message: String },

    /// A scenario configuration field is out of range or unresolvable.
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("loss distribution is not normalized")]
    Unnormalized,

    #[error("loss distribution is empty")]
    EmptyDistribution,

    #[error("configurations do not share a feeder topology: {0}")]
    TopologyMismatch(String),

    #[error("failed to write output: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn validation(element: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            element: element.into(),
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input (files, fields, flags) rather
    /// than by a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Validation { .. }
                | Error::Config { .. }
                | Error::TopologyMismatch(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
