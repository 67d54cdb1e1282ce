use std::path::PathBuf;

use thiserror::Error;

/// A single rejected line of a record file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{} malformed record(s) in {path}: {}", errors.len(), summarize(errors))]
    Malformed {
        path: PathBuf,
        errors: Vec<LineError>,
    },

    #[error("corpus {0} contains no documents")]
    EmptyCorpus(PathBuf),

    #[error("invalid document {id}: {reason}")]
    InvalidDocument { id: String, reason: String },

    #[error("unknown document id {0}")]
    UnknownDocument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("embedding file {path}: {reason}")]
    Embedding { path: PathBuf, reason: String },

    #[error("contextual store: {0}")]
    Store(String),

    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("training requires oracle labels but document {0} has none")]
    MissingLabels(String),
}

fn summarize(errors: &[LineError]) -> String {
    let shown: Vec<String> = errors.iter().take(5).map(|e| e.to_string()).collect();
    let mut s = shown.join("; ");
    if errors.len() > 5 {
        s.push_str(&format!("; ... {} more", errors.len() - 5));
    }
    s
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
