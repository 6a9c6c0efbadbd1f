//! Artifact bookkeeping: every file written by a stage is hashed and listed
//! in `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    /// Hash over the output hashes in order.
    pub hash: String,
    /// Seconds; recorded only on request so manifests stay reproducible.
    pub wall_time: Option<f64>,
    /// Headline numbers of the stage, such as the ground-state energy.
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest { version: MANIFEST_VERSION, stages: Vec::new(), failure: None }
    }
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the inputs and outputs of one stage.
pub struct StageWriter {
    root: PathBuf,
    /// Directory outputs are written to; defaults to `root`.
    dir: PathBuf,
    name: String,
    inputs: Vec<Artifact>,
    outputs: Vec<Artifact>,
    metrics: BTreeMap<String, f64>,
}

impl StageWriter {
    pub fn new(root: &Path, name: &str) -> StageWriter {
        StageWriter {
            root: root.to_path_buf(),
            dir: root.to_path_buf(),
            name: name.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn set_dir(&mut self, dir: &Path) {
        self.dir = dir.to_path_buf();
    }

    pub fn outputs(&self) -> &[Artifact] {
        &self.outputs
    }

    fn relative(&self, path: &Path) -> String {
        let p = path.strip_prefix(&self.root).unwrap_or(path);
        p.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(Artifact { path: self.relative(path), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn read_input_string(&mut self, path: &Path) -> Result<String> {
        String::from_utf8(self.read_input(path)?).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// Records an input produced earlier in the same run.
    pub fn note_input(&mut self, artifact: &Artifact) {
        self.inputs.push(artifact.clone());
    }

    /// Writes `bytes` to `rel` under the stage directory.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<Artifact> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let a = Artifact { path: self.relative(&path), sha256: sha256_hex(bytes) };
        self.outputs.push(a.clone());
        Ok(a)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<Artifact> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn finish(self, wall_time: Option<f64>) -> StageRecord {
        let mut h = Sha256::new();
        for a in &self.outputs {
            h.update(a.sha256.as_bytes());
        }
        StageRecord {
            name: self.name,
            inputs: self.inputs,
            outputs: self.outputs,
            hash: hex::encode(h.finalize()),
            wall_time,
            metrics: self.metrics,
        }
    }
}
