//! Run manifest: what was run, what it produced, and checksums to verify it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Formats;
use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub resolved_config: String,
    pub files: Vec<FileRecord>,
    pub timings: Vec<Timing>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Option<Manifest>, CliError> {
        let path = dir.join(MANIFEST_NAME);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        serde_json::from_str(&text).map(Some).map_err(|e| CliError::Corrupt {
            path,
            reason: e.to_string(),
        })
    }

    pub fn record(&self, name: &str) -> Option<&FileRecord> {
        self.files.iter().find(|f| f.path == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory being filled by one command.
pub struct RunDir {
    root: PathBuf,
    formats: Formats,
    files: Vec<FileRecord>,
    timings: Vec<Timing>,
    pub warnings: Vec<String>,
    clock: Instant,
}

impl RunDir {
    pub fn create(root: &Path, formats: Formats) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            formats,
            files: Vec::new(),
            timings: Vec::new(),
            warnings: Vec::new(),
            clock: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn formats(&self) -> Formats {
        self.formats
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Close the current timing stage.
    pub fn lap(&mut self, stage: &str) {
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: self.clock.elapsed().as_secs_f64(),
        });
        self.clock = Instant::now();
    }

    pub fn finish(mut self, command: &str, config_text: &str, resolved: String) -> Result<Manifest, CliError> {
        self.warnings.dedup();
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            resolved_config: resolved,
            files: self.files,
            timings: self.timings,
            warnings: self.warnings,
        };
        let path = self.root.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&m).expect("serializable") + "\n";
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(m)
    }
}
