// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use spinscale_core::SpinError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Schema or value error, `path` names the offending key.
    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },

    /// Sequence-bound violations are reported verbatim.
    #[error("{0}")]
    SequenceBound(SpinError),

    #[error(transparent)]
    Simulation(#[from] SpinError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("no curves matched {0}")]
    NoMatch(String),

    #[error("cache collision: {path} holds a different cell with the same hash")]
    CacheCollision { path: PathBuf },

    #[error("missing results: {0}")]
    MissingResults(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for anything the user can fix in the input, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } | CliError::SequenceBound(_) => 2,
            _ => 1,
        }
    }
}

/// Classify a core error raised while checking a config.
pub fn from_validation(path: &str, err: SpinError) -> CliError {
    match err {
        SpinError::SequenceBound(_) | SpinError::NegativeDelay { .. } => CliError::SequenceBound(err),
        other => CliError::validation(path, other.to_string()),
    }
}
