//! Optimization: Adam, global-norm clipping, learning-rate schedules,
//! minibatch training with best-validation selection, and two-step training
//! with frozen attention parameters.

mod config;
mod optim;
mod trainer;
mod two_step;

pub use config::{parse_kv, AdamConfig, Decay, TrainConfig};
pub use optim::{clip_gradients, Adam};
pub use trainer::{accuracy, train, train_from, write_history_csv, EpochRecord, TrainOutcome};
pub use two_step::{
    freeze_groups, second_step, two_step_train, FreezeAudit, Strategy, TwoStepOutcome,
};
