//! Settings layering: architecture defaults, then the config file, then
//! `LATTN_*` environment variables, then `--set` flags and `--seed`.

use anyhow::Context;
use lattn_core::corpus::{DEFAULT_MAX_WORDS, DEFAULT_SEQ_LEN};
use lattn_core::models::{Architecture, ModelConfig, DEFAULT_DIM};
use lattn_core::training::{parse_kv, TrainConfig};
use lattn_core::Error;
use serde::Serialize;

use crate::cli::TrainingOptions;

pub const ENV_PREFIX: &str = "LATTN_";

/// Model and preprocessing options not covered by [`TrainConfig`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSettings {
    pub dim: usize,
    pub seq_len: usize,
    pub tie_embeddings: bool,
    pub normalize_active: bool,
    pub max_words: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            dim: DEFAULT_DIM,
            seq_len: DEFAULT_SEQ_LEN,
            tie_embeddings: false,
            normalize_active: true,
            max_words: DEFAULT_MAX_WORDS,
        }
    }
}

impl ModelSettings {
    fn set(&mut self, key: &str, value: &str) -> Result<bool, Error> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key}={value}: {e}"));
        match key {
            "dim" => self.dim = value.parse().map_err(|e| bad(&e))?,
            "seq_len" => self.seq_len = value.parse().map_err(|e| bad(&e))?,
            "tie_embeddings" => self.tie_embeddings = value.parse().map_err(|e| bad(&e))?,
            "normalize_active" => self.normalize_active = value.parse().map_err(|e| bad(&e))?,
            "max_words" => self.max_words = value.parse().map_err(|e| bad(&e))?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn model_config(
        &self,
        arch: Architecture,
        vocab_size: usize,
        classes: usize,
    ) -> ModelConfig {
        let mut config = ModelConfig::new(arch, vocab_size, classes)
            .with_dim(self.dim)
            .with_seq_len(self.seq_len);
        config.tie_embeddings = self.tie_embeddings;
        config.normalize_active = self.normalize_active;
        config
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub model: ModelSettings,
    pub train: TrainConfig,
}

impl Settings {
    pub fn defaults(arch: Architecture) -> Self {
        Settings {
            model: ModelSettings::default(),
            train: TrainConfig::for_arch(arch),
        }
    }

    /// Applies one setting; returns false when no layer knows the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, Error> {
        Ok(self.model.set(key, value)? || self.train.set(key, value)?)
    }

    fn set_known(&mut self, key: &str, value: &str, origin: &str) -> Result<(), Error> {
        if self.set(key, value)? {
            Ok(())
        } else {
            Err(Error::Config(format!("{origin}: unknown setting {key:?}")))
        }
    }

    /// Builds settings from every layer. Unknown keys in the file or in
    /// `--set` are errors; unknown `LATTN_*` variables are ignored so that
    /// unrelated variables with the prefix do not break runs.
    pub fn resolve<I>(opts: &TrainingOptions, seed: Option<u64>, env: I) -> anyhow::Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut settings = Settings::defaults(opts.model);
        if let Some(path) = &opts.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(|e| anyhow::Error::new(Error::Config(format!("{e:#}"))))?;
            for (key, value) in parse_kv(&text).map_err(|e| match e {
                Error::Parse { line, message } => {
                    Error::Config(format!("{} line {line}: {message}", path.display()))
                }
                other => other,
            })? {
                settings.set_known(&key, &value, &path.display().to_string())?;
            }
        }
        let mut env: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| Some((k.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase(), v)))
            .collect();
        env.sort();
        for (key, value) in env {
            let mut probe = settings.clone();
            if probe.set(&key, &value)? {
                settings = probe;
            }
        }
        for item in &opts.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
            settings.set_known(key.trim(), value.trim(), "--set")?;
        }
        if let Some(seed) = seed {
            settings.train.seed = seed;
        }
        settings.train.validate()?;
        Ok(settings)
    }
}

pub fn from_process_env(opts: &TrainingOptions, seed: Option<u64>) -> anyhow::Result<Settings> {
    Settings::resolve(opts, seed, std::env::vars())
}
