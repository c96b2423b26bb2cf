use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] nodalkk_core::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: nodalkk_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed cache file: {0}")]
    Cache(String),
    #[error("cache was written for config {found}, current config is {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("eigenvalue {index} belongs to a cluster of size {size}; pass --force to use it anyway")]
    Degenerate { index: usize, size: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

/// Attaches context to core errors.
pub trait Context<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for std::result::Result<T, nodalkk_core::Error> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| LabError::Context { context: f(), source })
    }
}
