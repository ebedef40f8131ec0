use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run. Everything except `wall_time_secs` is a function of
/// the inputs, flags and seed.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    /// Input path -> SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub checkpoint: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<Value>,
    pub wall_time_secs: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                config: Value::Null,
                seed: None,
                inputs: BTreeMap::new(),
                checkpoint: None,
                metrics: None,
                extra: None,
                wall_time_secs: 0.0,
            },
        }
    }

    pub fn config<T: Serialize>(&mut self, config: &T) -> anyhow::Result<&mut Self> {
        self.manifest.config = serde_json::to_value(config)?;
        Ok(self)
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<&mut Self> {
        let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        self.manifest.inputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(self)
    }

    pub fn checkpoint(&mut self, path: PathBuf) -> &mut Self {
        self.manifest.checkpoint = Some(path);
        self
    }

    pub fn metrics(&mut self, path: PathBuf) -> &mut Self {
        self.manifest.metrics = Some(path);
        self
    }

    pub fn extra<T: Serialize>(&mut self, extra: &T) -> anyhow::Result<&mut Self> {
        self.manifest.extra = Some(serde_json::to_value(extra)?);
        Ok(self)
    }

    /// Writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> anyhow::Result<()> {
        self.manifest.wall_time_secs = self.started.elapsed().as_secs_f64();
        write_json(&dir.join(MANIFEST_FILE), &self.manifest)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
