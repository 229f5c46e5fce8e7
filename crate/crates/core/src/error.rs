use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action {action} for agent {agent} (action count {count})")]
    InvalidAction {
        agent: usize,
        action: usize,
        count: usize,
    },
    #[error("expected {expected} joint entries, got {got}")]
    JointArity { expected: usize, got: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("duplicate policy `{0}`")]
    DuplicatePolicy(String),
    #[error("belief depleted: {0}")]
    Depletion(String),
    #[error("enumeration cap exceeded ({size} > {cap}); use a smaller instance or horizon")]
    CapExceeded { size: usize, cap: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
