use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Architecture, DEFAULT_INIT_RANGE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Decay {
    None,
    /// Multiply the rate by `factor` after every `every` minibatch steps.
    Step {
        factor: f64,
        every: usize,
    },
}

impl Decay {
    pub fn rate(&self, base: f64, step: usize) -> f64 {
        match *self {
            Decay::None => base,
            Decay::Step { factor, every } => base * factor.powi((step / every.max(1)) as i32),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay: Decay,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub init_range: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without a new best validation accuracy.
    pub patience: Option<usize>,
    pub seed: u64,
    /// Parameter groups (`theta1`, `u`, ...) or names held fixed.
    pub freeze: BTreeSet<String>,
    pub adam: AdamConfig,
    /// Epoch budget of the second step of two-step training.
    pub step2_epochs: usize,
}

impl TrainConfig {
    /// Attention models: lr 0.001 without decay, clip 40. No-attention
    /// models: lr 0.01 decayed by 0.9 every 1000 steps, clip 5.
    pub fn for_arch(arch: Architecture) -> Self {
        let (learning_rate, decay, clip_norm) = if arch.has_attention() {
            (0.001, Decay::None, 40.0)
        } else {
            (
                0.01,
                Decay::Step {
                    factor: 0.9,
                    every: 1000,
                },
                5.0,
            )
        };
        TrainConfig {
            learning_rate,
            decay,
            clip_norm,
            batch_size: 32,
            init_range: DEFAULT_INIT_RANGE,
            max_epochs: 30,
            patience: Some(5),
            seed: 0,
            freeze: BTreeSet::new(),
            adam: AdamConfig::default(),
            step2_epochs: 10,
        }
    }

    /// Applies one `key=value` setting. Returns `Ok(false)` for keys this
    /// type does not know, so callers can route them elsewhere.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key}={value}: {e}"));
        match key {
            "learning_rate" | "lr" => self.learning_rate = value.parse().map_err(|e| bad(&e))?,
            "decay" => {
                self.decay = match value {
                    "none" => Decay::None,
                    "step" => match self.decay {
                        Decay::Step { .. } => self.decay,
                        Decay::None => Decay::Step {
                            factor: 0.9,
                            every: 1000,
                        },
                    },
                    other => return Err(bad(&format!("unknown decay {other:?}"))),
                }
            }
            "decay_factor" | "decay_every" => {
                let (mut factor, mut every) = match self.decay {
                    Decay::Step { factor, every } => (factor, every),
                    Decay::None => (0.9, 1000),
                };
                if key == "decay_factor" {
                    factor = value.parse().map_err(|e| bad(&e))?;
                } else {
                    every = value.parse().map_err(|e| bad(&e))?;
                }
                self.decay = Decay::Step { factor, every };
            }
            "clip_norm" => self.clip_norm = value.parse().map_err(|e| bad(&e))?,
            "batch_size" => self.batch_size = value.parse().map_err(|e| bad(&e))?,
            "init_range" => self.init_range = value.parse().map_err(|e| bad(&e))?,
            "max_epochs" | "epochs" => self.max_epochs = value.parse().map_err(|e| bad(&e))?,
            "patience" => {
                let p: usize = value.parse().map_err(|e| bad(&e))?;
                self.patience = (p > 0).then_some(p);
            }
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "freeze" => {
                self.freeze = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            "beta1" => self.adam.beta1 = value.parse().map_err(|e| bad(&e))?,
            "beta2" => self.adam.beta2 = value.parse().map_err(|e| bad(&e))?,
            "adam_eps" => self.adam.eps = value.parse().map_err(|e| bad(&e))?,
            "step2_epochs" => self.step2_epochs = value.parse().map_err(|e| bad(&e))?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::Config(
                "learning_rate and clip_norm must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if let Decay::Step { every: 0, .. } = self.decay {
            return Err(Error::Config("decay_every must be positive".into()));
        }
        Ok(())
    }
}

/// Parses flat `key=value` text. Blank lines and `#` comments are ignored.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected key=value, got {raw:?}"),
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_architecture() {
        let att = TrainConfig::for_arch("dict-latent".parse().unwrap());
        assert_eq!(
            (att.learning_rate, att.decay, att.clip_norm),
            (0.001, Decay::None, 40.0)
        );
        let plain = TrainConfig::for_arch("bdlstm-none".parse().unwrap());
        assert_eq!(plain.learning_rate, 0.01);
        assert_eq!(
            plain.decay,
            Decay::Step {
                factor: 0.9,
                every: 1000
            }
        );
        assert_eq!(plain.clip_norm, 5.0);
        assert_eq!(plain.batch_size, 32);
        assert_eq!(plain.init_range, 0.1);
    }

    #[test]
    fn step_decay_schedule() {
        let d = Decay::Step {
            factor: 0.9,
            every: 1000,
        };
        assert_eq!(d.rate(0.01, 0), 0.01);
        assert_eq!(d.rate(0.01, 999), 0.01);
        assert!((d.rate(0.01, 1000) - 0.009).abs() < 1e-15);
        assert!((d.rate(0.01, 2500) - 0.0081).abs() < 1e-15);
    }

    #[test]
    fn kv_parsing_and_overrides() {
        let kv =
            parse_kv("# comment\nlr = 0.05\n\nfreeze=theta1, u\npatience=0\nunknown=1\n").unwrap();
        let mut cfg = TrainConfig::for_arch("dict-attn".parse().unwrap());
        let mut unknown = Vec::new();
        for (k, v) in &kv {
            if !cfg.set(k, v).unwrap() {
                unknown.push(k.clone());
            }
        }
        assert_eq!(cfg.learning_rate, 0.05);
        assert_eq!(cfg.freeze.len(), 2);
        assert_eq!(cfg.patience, None);
        assert_eq!(unknown, vec!["unknown".to_string()]);
        assert!(parse_kv("novalue").is_err());
        assert!(cfg.set("lr", "fast").is_err());
    }
}
