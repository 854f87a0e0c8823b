use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: dimension mismatch: expected {expected}, found {found}", .path.display())]
    Dimension {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{}:{line}: {source}", .path.display())]
    InvalidNode {
        path: PathBuf,
        line: usize,
        #[source]
        source: probi_core::Error,
    },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] probi_core::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

fn core_kind(e: &probi_core::Error) -> &'static str {
    use probi_core::Error::*;
    match e {
        InvalidProbability(_) | TotalProbabilityExceeded(_) => "invalid_probability",
        DimensionMismatch { .. } => "dimension_mismatch",
        InvalidConfig(_) => "invalid_argument",
        _ => "invalid_input",
    }
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            HarnessError::MissingFile(path)
        } else {
            HarnessError::Io { path, source }
        }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::MissingFile(_) => "missing_file",
            HarnessError::Io { .. } => "io",
            HarnessError::Parse { .. } => "parse",
            HarnessError::Dimension { .. } => "dimension_mismatch",
            HarnessError::InvalidNode { source, .. } => core_kind(source),
            HarnessError::InvalidArgument(_) => "invalid_argument",
            HarnessError::Usage(_) => "usage",
            HarnessError::Core(e) => core_kind(e),
        }
    }

    /// The error object printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        let (path, line) = match self {
            HarnessError::MissingFile(p) | HarnessError::Io { path: p, .. } => (Some(p), None),
            HarnessError::Parse { path, line, .. }
            | HarnessError::Dimension { path, line, .. }
            | HarnessError::InvalidNode { path, line, .. } => (Some(path), Some(*line)),
            _ => (None, None),
        };
        if let Some(p) = path {
            body["path"] = json!(p.display().to_string());
        }
        if let Some(l) = line {
            body["line"] = json!(l);
        }
        json!({ "error": body })
    }
}
