use std::path::PathBuf;

use hlmt_core::HlError;
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const ERROR_SCHEMA: &str = "hlmt.error/1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: row {row}, column {column}: {message}", path.display())]
    Parse { path: PathBuf, row: u64, column: usize, message: String },

    #[error("{0}")]
    Data(String),

    #[error("truth file lists coordinate {index}, but the data has {p} columns")]
    TruthDimensionMismatch { index: usize, p: usize },

    #[error("replay mismatch: {0}")]
    Replay(String),

    #[error(transparent)]
    Core(#[from] HlError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Wraps a configuration problem. Core validation messages carry the
    /// field as a `field: message` prefix.
    pub fn config_from(err: HlError) -> Self {
        match err {
            HlError::InvalidParameter(msg) => match msg.split_once(": ") {
                Some((field, rest)) if !field.contains(' ') => {
                    CliError::Config { field: field.to_string(), message: rest.to_string() }
                }
                _ => CliError::Config { field: "config".into(), message: msg },
            },
            other => CliError::Core(other),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Data(_) => "data",
            CliError::TruthDimensionMismatch { .. } => "truth-dimension-mismatch",
            CliError::Replay(_) => "replay-mismatch",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(HlError::InvalidParameter(_)) => "invalid-parameter",
            CliError::Core(_) => "data",
        }
    }

    /// 1 usage/config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Core(HlError::InvalidParameter(_)) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Replay(_) => 3,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut err = Map::new();
        err.insert("kind".into(), json!(self.kind()));
        err.insert("exit_code".into(), json!(self.exit_code()));
        err.insert("message".into(), json!(self.to_string()));
        match self {
            CliError::Config { field, .. } => {
                err.insert("field".into(), json!(field));
            }
            CliError::Io { path, .. } => {
                err.insert("path".into(), json!(path));
            }
            CliError::Parse { path, row, column, .. } => {
                err.insert("path".into(), json!(path));
                err.insert("row".into(), json!(row));
                err.insert("column".into(), json!(column));
            }
            _ => {}
        }
        json!({ "schema_version": ERROR_SCHEMA, "error": err })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
