//! File formats, caching, run orchestration and the command-line harness
//! around `landau-core`.

pub mod cache;
pub mod catalog;
pub mod config;
pub mod experiments;
pub mod io;
pub mod manifest;

pub use config::{Experiment, RunConfig};

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{module}: {source}")]
    Solver {
        module: &'static str,
        #[source]
        source: landau_core::Error,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Invalid(_) => 2,
            LabError::Solver { .. } | LabError::Io { .. } => 3,
            LabError::Invariant(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        LabError::Io { path: path.display().to_string(), source }
    }
}

/// Attaches the module name to a core error.
pub trait InModule<T> {
    fn in_module(self, module: &'static str) -> Result<T, LabError>;
}

impl<T> InModule<T> for landau_core::Result<T> {
    fn in_module(self, module: &'static str) -> Result<T, LabError> {
        self.map_err(|source| LabError::Solver { module, source })
    }
}
