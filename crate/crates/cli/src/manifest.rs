//! Run manifests: what a command read, what it wrote, and with which settings.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// Collects inputs and outputs as the command runs. Outputs registered on a
/// recorder that is dropped without `finish` are deleted.
pub struct Recorder {
    command: String,
    started: u128,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    finished: bool,
}

impl Recorder {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            started: now_ms(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            finished: false,
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Registers a file about to be written.
    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `<primary>.run.json` describing the run.
    pub fn finish(mut self, primary: &Path, seed: Option<u64>, config: serde_json::Value) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: self.inputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            outputs: self.outputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
        };
        let path = sibling(primary, ".run.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        halograph::write_atomic(&path, text.as_bytes())?;
        self.finished = true;
        Ok(path)
    }
}

impl Drop for Recorder {
    fn drop(&mut self) {
        if !self.finished {
            for p in &self.outputs {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
