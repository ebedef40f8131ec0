//! Metrics, ensembles, the frequency baseline for arguments, the synthetic
//! mirrored-template corpus, and table output.

mod args;
mod ensemble;
mod metrics;
mod synthetic;
mod table;

pub use args::{
    arg_f1, fit_arg_model, predict_args, ArgFreqModel, ArgPrediction, ArgValue, MISSING,
};
pub use ensemble::{function_accuracy, rank_by_validation, select_best_k, Classifier, Ensemble};
pub use metrics::{evaluate, Metrics, SubsetMetrics};
pub use synthetic::{
    action_function, gen_synthetic_corpus, service_name, split_by_word_bag, trigger_function,
    SyntheticSpec, DEFAULT_TEMPLATES, SERVICE_NAMES,
};
pub use table::{ensemble_table, format_table, EnsembleRow};
