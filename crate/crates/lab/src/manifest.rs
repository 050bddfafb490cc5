use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::io::FileEntry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Everything needed to audit a run directory; wall-clock times live here and
/// nowhere else, so the CSV outputs stay byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub module_versions: Vec<(String, String)>,
    pub threads: usize,
    pub cache: String,
    pub phases: Vec<Phase>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(experiment: &str, config_hash: &str, threads: usize, cache: &str) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash: config_hash.into(),
            module_versions: vec![
                ("landau-core".into(), landau_core::VERSION.into()),
                ("landau-lab".into(), env!("CARGO_PKG_VERSION").into()),
            ],
            threads,
            cache: cache.into(),
            phases: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Runs `f`, recording its wall-clock time under `name`.
    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push(Phase { name: name.into(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn total_seconds(&self) -> f64 {
        self.phases.iter().map(|p| p.seconds).sum()
    }
}
