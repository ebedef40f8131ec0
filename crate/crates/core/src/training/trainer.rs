use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::optim::{clip_gradients, Adam};
use crate::corpus::EncodedExample;
use crate::error::{Error, Result};
use crate::models::{predict_label, Model, ModelConfig};
use crate::rng::{stream, Stream};
use crate::tensor::{Grads, ParamStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Validation accuracy, or training accuracy when no validation set
    /// was given.
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best selection accuracy.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of the returned model; 0 when no epoch ran.
    pub best_epoch: usize,
    pub steps: usize,
}

/// Fraction of examples whose argmax prediction equals the target.
pub fn accuracy(model: &Model, examples: &[EncodedExample]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for ex in examples {
        if predict_label(&model.predict_proba(&ex.ids)?) == ex.target {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Initializes a model from `cfg.init_range` and `cfg.seed`, then trains it.
pub fn train(
    config: ModelConfig,
    train_set: &[EncodedExample],
    valid: &[EncodedExample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let model = Model::init(config, cfg.init_range, cfg.seed)?;
    train_from(model, train_set, valid, cfg)
}

/// Trains an existing model. Parameter groups in `cfg.freeze` are frozen for
/// the run and stay marked frozen in the returned model; any freeze marks the
/// model arrived with are cleared first.
pub fn train_from(
    mut model: Model,
    train_set: &[EncodedExample],
    valid: &[EncodedExample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    model.params_mut().unfreeze_all();
    for group in &cfg.freeze {
        for name in model.group_params(group)? {
            model.params_mut().set_frozen(&name, true)?;
        }
    }

    let mut shuffle_rng = stream(cfg.seed, Stream::Shuffle);
    let mut adam = Adam::new(cfg.adam);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ParamStore)> = None;
    let mut steps = 0usize;
    let mut grads = Grads::zeros_like(model.params());

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.zero();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &train_set[i];
                let loss = model.loss_and_grad(&ex.ids, ex.target, scale, &mut grads)?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite loss {loss} at epoch {epoch}, step {steps}, example {i}"
                    )));
                }
                loss_sum += loss;
            }
            grads.mask_frozen(model.params());
            clip_gradients(&mut grads, cfg.clip_norm);
            if !grads.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient at epoch {epoch}, step {steps}"
                )));
            }
            let lr = cfg.decay.rate(cfg.learning_rate, steps);
            adam.step(model.params_mut(), &grads, lr)?;
            steps += 1;
        }

        let selection = if valid.is_empty() {
            accuracy(&model, train_set)?
        } else {
            accuracy(&model, valid)?
        };
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_acc: selection,
        });

        let improved = best.as_ref().map_or(true, |(acc, _, _)| selection > *acc);
        if improved {
            best = Some((selection, epoch, model.params().clone()));
        }
        let best_epoch = best.as_ref().map_or(0, |b| b.1);
        if cfg.patience.is_some_and(|p| epoch - best_epoch >= p) {
            break;
        }
    }

    let best_epoch = match best {
        Some((_, epoch, params)) => {
            *model.params_mut() = params;
            epoch
        }
        None => 0,
    };
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        steps,
    })
}

/// Writes `epoch,train_loss,val_acc` rows.
pub fn write_history_csv<W: Write>(mut out: W, history: &[EpochRecord]) -> Result<()> {
    writeln!(out, "epoch,train_loss,val_acc")?;
    for r in history {
        writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_acc)?;
    }
    Ok(())
}
