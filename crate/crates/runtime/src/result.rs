use std::fmt;

use dseval_core::Value;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    ModuleNotFound,
    Attribute,
    Key,
    Name,
    Type,
    Value,
    Syntax,
    Timeout,
    ForbiddenName,
    Other,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_value(self).ok();
        f.write_str(text.as_ref().and_then(|v| v.as_str()).unwrap_or("other"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(default)]
    pub traceback: String,
}

/// Value of a cell's trailing expression plus its `str()` rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultValue {
    pub value: Value,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub execute_result: Option<ResultValue>,
    #[serde(default)]
    pub stream_output: String,
    pub error: Option<ExecError>,
    #[serde(default)]
    pub duration: f64,
}

impl ExecutionResult {
    pub fn failed(kind: ErrorKind, message: impl Into<String>, duration: f64) -> Self {
        ExecutionResult {
            execute_result: None,
            stream_output: String::new(),
            error: Some(ExecError {
                kind,
                message: message.into(),
                traceback: String::new(),
            }),
            duration,
        }
    }

    pub fn error_kind(&self) -> Option<ErrorKind> {
        self.error.as_ref().map(|e| e.kind)
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}
