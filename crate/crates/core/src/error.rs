use std::path::PathBuf;

use thiserror::Error;

use crate::character::CharacterId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid character name: {0:?}")]
    InvalidName(String),

    #[error("unknown character {0:?} (strict alias resolution)")]
    UnknownAlias(String),

    #[error("alias table: {0}")]
    AliasConflict(String),

    #[error("unknown node {0}")]
    UnknownNode(CharacterId),

    #[error("unknown export format {0:?} (expected edge-csv or dot)")]
    UnknownFormat(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("SMO did not converge after {iterations} iterations (violation gap {gap:e}, tolerance {tolerance:e})")]
    NotConverged { iterations: usize, gap: f64, tolerance: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown character {0} in {1}")]
    UnknownCharacter(CharacterId, &'static str),

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("stage {stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage { stage, source: Box::new(other) },
        }
    }
}
