use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or command field failed validation.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("consumption data: {0}")]
    Consumption(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("series too short: need {needed} samples, have {have}")]
    SeriesTooShort { needed: usize, have: usize },

    #[error("engine is stopped")]
    Stopped,

    #[error("parameter path `{0}` does not address a scalar field")]
    BadPath(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("scenario parse: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than the runtime.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::Consumption(_)
                | Error::SeriesTooShort { .. }
                | Error::BadPath(_)
                | Error::Toml(_)
                | Error::Json(_)
        )
    }
}
