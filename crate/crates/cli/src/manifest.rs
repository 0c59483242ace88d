//! Run manifest: one JSON audit record per subcommand invocation.

use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mbda_core::error::{Error, Result};

#[derive(Serialize)]
struct InputEntry {
    path: String,
    bytes: u64,
}

#[derive(Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config_digest: String,
    inputs: Vec<InputEntry>,
    timings_ms: BTreeMap<String, u64>,
    counts: BTreeMap<String, u64>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config_digest: &str) -> Self {
        Manifest {
            tool: "mbda",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_digest: config_digest.to_string(),
            inputs: Vec::new(),
            timings_ms: BTreeMap::new(),
            counts: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        let bytes = std::fs::metadata(path).map(|m| m.len()).unwrap_or(0);
        self.inputs.push(InputEntry {
            path: path.display().to_string(),
            bytes,
        });
    }

    pub fn count(&mut self, name: &str, value: u64) {
        self.counts.insert(name.to_string(), value);
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Time a pipeline step and record it.
    pub fn step<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        let ms = start.elapsed().as_millis() as u64;
        *self.timings_ms.entry(name.to_string()).or_insert(0) += ms;
        Ok(out)
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("run_manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}
