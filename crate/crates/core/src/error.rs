use std::io;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mask has no set pixels")]
    EmptyMask,
    #[error("scene has no target block")]
    MissingTarget,
    #[error("random clutter placement did not terminate after {attempts} attempts")]
    SpawnFailure { attempts: usize },
    #[error("generator produced no candidates")]
    NoCandidates,
    #[error("no push or grasp candidates to select from")]
    NoActions,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: line {line}, field `{field}`: {message}")]
    Parse {
        path: String,
        line: usize,
        field: String,
        message: String,
    },
    #[error("bad binary format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
