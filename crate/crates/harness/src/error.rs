use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad or inconsistent configuration (exit code 2).
    #[error("{0}")]
    Config(String),

    /// A safety or determinism invariant failed at runtime (exit code 3).
    /// These are never warnings: a certified-safe algorithm querying an
    /// unsafe point means the experiment itself is broken.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Problems writing results or reading inputs (exit code 1).
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Numerical failure bubbled up from the solver layer (exit code 1).
    #[error(transparent)]
    Core(#[from] safebo::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        HarnessError::Invariant(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Invariant(_) => 3,
            HarnessError::Io { .. } | HarnessError::Core(_) => 1,
        }
    }
}
