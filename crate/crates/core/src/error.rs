use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class; maps onto CLI exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// Bad or missing input (exit code 1).
    Input,
    /// The analysis itself cannot proceed (exit code 2).
    Analysis,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Input(String),

    #[error("missing upstream artifact `{}`; run `{producer}` first", path.display())]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error("include cycle: {}", cycle.join(" -> "))]
    IncludeCycle { cycle: Vec<String> },

    #[error("{artifact} violates {} invariant(s): {}", violations.len(), violations.join("; "))]
    InvariantViolation {
        artifact: &'static str,
        violations: Vec<String>,
    },

    #[error("no root launch file: the launch dependency description is empty")]
    NoRoot,

    #[error("PlantUML parse error at line {line}: {message}")]
    PlantUml { line: usize, message: String },

    #[error("unknown prompt template `{name}` (available: {})", available.join(", "))]
    UnknownTemplate {
        name: String,
        available: Vec<&'static str>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: invalid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Input(_)
            | Error::MissingArtifact { .. }
            | Error::UnknownTemplate { .. }
            | Error::Io { .. }
            | Error::Json { .. } => ErrorClass::Input,
            Error::IncludeCycle { .. }
            | Error::InvariantViolation { .. }
            | Error::NoRoot
            | Error::PlantUml { .. } => ErrorClass::Analysis,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
