//! Run manifest written at the start of every command and finalized at the end.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub code_version: String,
    pub outputs: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub status: RunStatus,
    pub error: Option<String>,
}

/// An output directory owned by one command invocation.
pub struct RunDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    /// Creates `root` and writes the manifest. An existing manifest means a
    /// previous run used this directory; that is refused unless `force`.
    pub fn create(root: &Path, force: bool, mut manifest: RunManifest) -> Result<Self> {
        if root.join(MANIFEST_FILE).exists() && !force {
            bail!("{} already holds a run; pass --force to overwrite it", root.display());
        }
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        manifest.status = RunStatus::Running;
        let dir = Self {
            root: root.to_path_buf(),
            manifest,
        };
        dir.write_manifest()?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of an output file, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn finish(mut self, result: &Result<()>) -> Result<()> {
        self.manifest.finished_at = Some(Utc::now());
        match result {
            Ok(()) => self.manifest.status = RunStatus::Succeeded,
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.error = Some(format!("{e:#}"));
            }
        }
        // list only what was actually written
        let root = self.root.clone();
        self.manifest.outputs.retain(|o| root.join(o).exists());
        self.write_manifest()
    }

    fn write_manifest(&self) -> Result<()> {
        let path = self.root.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))
    }
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            arguments: std::env::args().collect(),
            config,
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            started_at: Utc::now(),
            finished_at: None,
            status: RunStatus::Running,
            error: None,
        }
    }
}
