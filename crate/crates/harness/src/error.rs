use std::path::PathBuf;

use qrn_core::optimizer::OptimizeError;
use qrn_core::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("no feasible solution")]
    NoFeasibleSolution,

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
}

impl HarnessError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::InvalidSpec(_) => 1,
            HarnessError::NoFeasibleSolution => 2,
            HarnessError::Io { .. } => 3,
            HarnessError::OracleMismatch(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::InvalidSpec(e.to_string())
    }
}

impl From<OptimizeError> for HarnessError {
    fn from(e: OptimizeError) -> Self {
        HarnessError::InvalidSpec(e.to_string())
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;
