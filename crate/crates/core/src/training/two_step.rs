use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::trainer::{train, train_from, EpochRecord, TrainOutcome};
use crate::corpus::EncodedExample;
use crate::error::{Error, Result};
use crate::models::{Architecture, AttentionKind, Model, ModelConfig};

/// One-shot training strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Train on the skewed set only.
    #[serde(rename = "standard")]
    Standard,
    /// Continue on the rebalanced set with nothing frozen.
    #[serde(rename = "naive2")]
    NaiveTwoStep,
    /// Continue on the rebalanced set with attention parameters frozen.
    #[serde(rename = "2step")]
    TwoStep,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Standard,
        Strategy::NaiveTwoStep,
        Strategy::TwoStep,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Standard => "standard",
            Strategy::NaiveTwoStep => "naive2",
            Strategy::TwoStep => "2step",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Strategy::Standard),
            "naive2" | "naive" => Ok(Strategy::NaiveTwoStep),
            "2step" | "two-step" => Ok(Strategy::TwoStep),
            _ => Err(Error::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Parameter groups held fixed in the second step.
pub fn freeze_groups(arch: Architecture) -> Result<&'static [&'static str]> {
    match arch.attention {
        AttentionKind::Latent => Ok(&["theta1", "theta2", "u", "V"]),
        AttentionKind::Standard => Ok(&["theta1", "u"]),
        AttentionKind::None => Err(Error::Config(format!(
            "{} has no attention parameters to freeze; two-step training needs an attention model",
            arch.label()
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezeAudit {
    pub name: String,
    /// Bitwise equality of the parameter before and after step 2.
    pub unchanged: bool,
}

#[derive(Clone, Debug)]
pub struct TwoStepOutcome {
    pub model: Model,
    pub step1_history: Vec<EpochRecord>,
    pub step2_history: Vec<EpochRecord>,
    pub frozen: Vec<String>,
    pub audit: Vec<FreezeAudit>,
}

impl TwoStepOutcome {
    pub fn frozen_unchanged(&self) -> bool {
        self.audit.iter().all(|a| a.unchanged)
    }
}

/// Step 2 only: continues `step1` on the rebalanced set for
/// `cfg.step2_epochs` epochs with a fresh optimizer state.
pub fn second_step(
    step1: &Model,
    rebalanced: &[EncodedExample],
    valid: &[EncodedExample],
    cfg: &TrainConfig,
    naive: bool,
) -> Result<(TrainOutcome, Vec<String>, Vec<FreezeAudit>)> {
    let arch = step1.config().arch;
    let mut cfg2 = cfg.clone();
    cfg2.max_epochs = cfg.step2_epochs;
    cfg2.freeze.clear();
    if !naive {
        cfg2.freeze
            .extend(freeze_groups(arch)?.iter().map(|g| g.to_string()));
    }
    let mut frozen = Vec::new();
    for g in &cfg2.freeze {
        frozen.extend(step1.group_params(g)?);
    }
    frozen.sort();
    frozen.dedup();

    let outcome = train_from(step1.clone(), rebalanced, valid, &cfg2)?;
    let mut audit = Vec::new();
    for name in &frozen {
        let before = step1.params().get(name)?.data();
        let after = outcome.model.params().get(name)?.data();
        let unchanged = before.len() == after.len()
            && before
                .iter()
                .zip(after)
                .all(|(a, b)| a.to_bits() == b.to_bits());
        audit.push(FreezeAudit {
            name: name.clone(),
            unchanged,
        });
    }
    Ok((outcome, frozen, audit))
}

/// Step 1 trains on the skewed set; step 2 continues on the rebalanced set,
/// freezing the attention parameters unless `naive`.
pub fn two_step_train(
    config: ModelConfig,
    skewed: &[EncodedExample],
    rebalanced: &[EncodedExample],
    valid: &[EncodedExample],
    cfg: &TrainConfig,
    naive: bool,
) -> Result<TwoStepOutcome> {
    if !naive {
        freeze_groups(config.arch)?;
    }
    let mut cfg1 = cfg.clone();
    cfg1.freeze.clear();
    let step1 = train(config, skewed, valid, &cfg1)?;
    let (step2, frozen, audit) = second_step(&step1.model, rebalanced, valid, cfg, naive)?;
    Ok(TwoStepOutcome {
        model: step2.model,
        step1_history: step1.history,
        step2_history: step2.history,
        frozen,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tiny_config;

    fn data(targets: &[usize]) -> Vec<EncodedExample> {
        targets
            .iter()
            .enumerate()
            .map(|(i, &t)| EncodedExample {
                ids: vec![2 + (i % 7), 3 + t, 9, 0, 0],
                target: t,
            })
            .collect()
    }

    #[test]
    fn freeze_sets() {
        assert_eq!(
            freeze_groups("dict-latent".parse().unwrap()).unwrap(),
            &["theta1", "theta2", "u", "V"]
        );
        assert_eq!(
            freeze_groups("bdlstm-attn".parse().unwrap()).unwrap(),
            &["theta1", "u"]
        );
        assert!(matches!(
            freeze_groups("dict-none".parse().unwrap()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn frozen_parameters_bit_identical() {
        for arch in ["dict-latent", "bdlstm-latent", "dict-attn", "bdlstm-attn"] {
            let arch: Architecture = arch.parse().unwrap();
            let mut cfg = TrainConfig::for_arch(arch);
            cfg.max_epochs = 3;
            cfg.step2_epochs = 3;
            cfg.learning_rate = 0.05;
            let out = two_step_train(
                tiny_config(arch),
                &data(&[0, 0, 0, 1]),
                &data(&[0, 1, 1, 2]),
                &[],
                &cfg,
                false,
            )
            .unwrap();
            assert!(!out.audit.is_empty());
            assert!(out.frozen_unchanged(), "{arch}: {:?}", out.audit);
        }
    }

    #[test]
    fn naive_with_zero_step2_epochs_is_step1() {
        let arch: Architecture = "dict-latent".parse().unwrap();
        let mut cfg = TrainConfig::for_arch(arch);
        cfg.max_epochs = 2;
        cfg.step2_epochs = 0;
        let skewed = data(&[0, 1, 2]);
        let out =
            two_step_train(tiny_config(arch), &skewed, &data(&[2, 2]), &[], &cfg, true).unwrap();
        let step1 = train(tiny_config(arch), &skewed, &[], &cfg).unwrap();
        assert_eq!(out.model.params(), step1.model.params());
        assert!(out.frozen.is_empty());
    }

    #[test]
    fn no_attention_model_rejected() {
        let arch: Architecture = "bdlstm-none".parse().unwrap();
        let cfg = TrainConfig::for_arch(arch);
        let r = two_step_train(
            tiny_config(arch),
            &data(&[0]),
            &data(&[1]),
            &[],
            &cfg,
            false,
        );
        assert!(matches!(r, Err(Error::Config(_))));
        assert!(
            two_step_train(tiny_config(arch), &data(&[0]), &data(&[1]), &[], &cfg, true).is_ok()
        );
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
    }
}
