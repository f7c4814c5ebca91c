use std::fmt;
use std::path::Path;

use beatdesign_core::Error;
use serde::Serialize;
use serde_json::{Map, Value};

/// Failure report printed as JSON on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub stage: String,
    pub code: String,
    pub message: String,
    pub context: Map<String, Value>,
}

impl CliError {
    pub fn new(stage: &str, code: &str, message: impl Into<String>) -> Self {
        CliError {
            stage: stage.into(),
            code: code.into(),
            message: message.into(),
            context: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl IntoContext) -> Self {
        self.context.insert(key.into(), value.into_context());
        self
    }

    pub fn from_core(stage: &str, e: Error) -> Self {
        let mut err = CliError::new(stage, e.code(), e.to_string());
        match &e {
            Error::Io { path, .. } => err = err.with("path", path.as_path()),
            Error::Parse { path, .. } | Error::TooManyBadRows { path, .. } => err = err.with("path", path.as_str()),
            Error::Lp { line, .. } => err = err.with("line", *line as u64),
            Error::RankDeficient(cols) => err = err.with("columns", cols.clone()),
            _ => {}
        }
        err
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.stage, self.message, self.code)
    }
}

impl std::error::Error for CliError {}

pub trait IntoContext {
    fn into_context(self) -> Value;
}

impl IntoContext for &Path {
    fn into_context(self) -> Value {
        Value::String(self.display().to_string())
    }
}

impl IntoContext for &str {
    fn into_context(self) -> Value {
        Value::String(self.into())
    }
}

impl IntoContext for u64 {
    fn into_context(self) -> Value {
        Value::from(self)
    }
}

impl IntoContext for Vec<String> {
    fn into_context(self) -> Value {
        Value::from(self)
    }
}

/// Attaches a stage name to core results.
pub trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for beatdesign_core::Result<T> {
    fn stage(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::from_core(stage, e))
    }
}
