use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// Record of one CLI run. The timestamp lives here and nowhere else, so data
/// files stay byte-identical across runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub scenario: FileEntry,
    pub parameters: Value,
    pub outputs: Vec<FileEntry>,
    pub wall_time_seconds: f64,
    pub timestamp_unix: u64,
}

/// Collects output files while a command runs.
pub struct Recorder {
    command: String,
    scenario: FileEntry,
    parameters: Value,
    outputs: Vec<FileEntry>,
    started: Instant,
}

impl Recorder {
    pub fn new(command: &str, scenario_path: &Path, scenario_bytes: &[u8], parameters: Value) -> Self {
        Self {
            command: command.to_string(),
            scenario: FileEntry { path: scenario_path.display().to_string(), sha256: sha256_hex(scenario_bytes) },
            parameters,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(FileEntry { path: path.display().to_string(), sha256: sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    /// Writes `manifest.json` next to the outputs.
    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: self.scenario,
            parameters: self.parameters,
            outputs: self.outputs,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let path = dir.join("manifest.json");
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
