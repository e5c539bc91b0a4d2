//! `manifest.json` written next to every run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use kickchain::experiments::ExperimentSpec;

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: ExperimentSpec,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_file: Option<PathBuf>,
    pub duration_seconds: f64,
    pub artifacts: Vec<Artifact>,
}

pub fn checksum(path: &Path) -> Result<(u64, String)> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((data.len() as u64, hex::encode(Sha256::digest(&data))))
}

impl RunManifest {
    pub fn new(command: &str, config: ExperimentSpec, seeds: Vec<u64>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seeds,
            schedule_file: None,
            duration_seconds: 0.0,
            artifacts: Vec::new(),
        }
    }

    /// Hashes `files` (relative to `dir`) and writes `dir/manifest.json`.
    pub fn finish(mut self, dir: &Path, files: &[PathBuf], duration_seconds: f64) -> Result<PathBuf> {
        self.duration_seconds = duration_seconds;
        for rel in files {
            let (bytes, sha256) = checksum(&dir.join(rel))?;
            self.artifacts.push(Artifact {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes,
                sha256,
            });
        }
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
