use serde::Serialize;
use serde_json::json;

/// A validation problem located by a JSON pointer into the config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config does not validate ({} issue(s))", .0.len())]
    Schema(Vec<Issue>),
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] echomem::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Unreadable { .. } | CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Unreadable { .. } => "unreadable",
            CliError::Usage(_) => "usage",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let issues = match self {
            CliError::Schema(v) => v.clone(),
            _ => Vec::new(),
        };
        json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
            "issues": issues,
        })
    }
}
