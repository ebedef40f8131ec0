use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lattn_core::corpus::{Target, DEFAULT_MAX_WORDS, DEFAULT_PER_GROUP, DEFAULT_SEQ_LEN};
use lattn_core::models::Architecture;
use lattn_core::training::Strategy;

#[derive(Parser, Debug)]
#[command(
    name = "lattn",
    version,
    about = "Latent Attention classifiers for If-Then recipes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a vocabulary file from recipe descriptions.
    BuildVocab(BuildVocabArgs),
    /// Encode recipes into fixed-length id sequences.
    EncodeCorpus(EncodeArgs),
    /// Generate a mirrored-template synthetic corpus.
    GenSynth(GenSynthArgs),
    /// Train one model per seed.
    Train(TrainArgs),
    /// Run the one-shot strategies on a skewed training set.
    Oneshot(OneshotArgs),
    /// Evaluate a checkpoint.
    Eval(EvalArgs),
    /// Evaluate ensembles of the best k checkpoints for k = 1..K.
    EnsembleEval(EnsembleArgs),
    /// Predict function arguments with the frequency baseline.
    PredictArgs(PredictArgsArgs),
    /// Compare analytic and numeric gradients on a tiny model.
    Gradcheck(GradcheckArgs),
    /// Write latent and active attention weights per example.
    DumpAttention(DumpArgs),
}

#[derive(Args, Debug)]
pub struct BuildVocabArgs {
    /// Recipes in JSONL format.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Keep at most this many words (PAD and UNK are extra).
    #[arg(long, default_value_t = DEFAULT_MAX_WORDS)]
    pub max_words: usize,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, default_value = "trigger-function")]
    pub target: Target,
    /// Label space JSON; derived from the input when omitted.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Where to write the label space used.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEQ_LEN)]
    pub seq_len: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 8)]
    pub services: usize,
    #[arg(long, default_value_t = 1200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Attach trigger and action arguments.
    #[arg(long)]
    pub with_args: bool,
    /// File with one template per line using {T} and {A}.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Write the whole corpus here.
    #[arg(long, required_unless_present = "split_dir")]
    pub output: Option<PathBuf>,
    /// Also write train/valid/test.jsonl split by word multiset.
    #[arg(long)]
    pub split_dir: Option<PathBuf>,
}

/// Options shared by commands that train.
#[derive(Args, Debug, Clone)]
pub struct TrainingOptions {
    /// Architecture, e.g. dict-latent, bdlstm-attn, dict-none.
    #[arg(long)]
    pub model: Architecture,
    /// Flat key=value settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a setting; wins over the file and LATTN_* variables.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub opts: TrainingOptions,
    #[arg(long, default_value = "trigger-function")]
    pub target: Target,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated seeds; one run directory per seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Number of runs to execute concurrently.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Majority = the top-k trigger functions.
    SkewTop,
    /// Majority = every trigger function outside the top k.
    SkewNontop,
}

#[derive(Args, Debug)]
pub struct OneshotArgs {
    #[command(flatten)]
    pub opts: TrainingOptions,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum, default_value = "skew-top")]
    pub scheme: Scheme,
    /// Strategies to run (standard, naive2, 2step); all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<Strategy>,
    #[arg(long, default_value_t = 100)]
    pub top_k: usize,
    #[arg(long, default_value_t = DEFAULT_PER_GROUP)]
    pub per_group: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// One function name per line; adds majority/minority breakdowns.
    #[arg(long)]
    pub subset_file: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Validation recipes used to rank the checkpoints.
    #[arg(long)]
    pub valid: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Largest ensemble size; defaults to the number of checkpoints.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub subset_file: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgsArgs {
    /// Recipes with argument annotations to count.
    #[arg(long)]
    pub train: PathBuf,
    /// Recipes to predict for.
    #[arg(long)]
    pub data: PathBuf,
    /// Trigger-function model; gold trigger functions are used when omitted.
    #[arg(long)]
    pub trigger_checkpoint: Option<PathBuf>,
    /// Action-function model; gold action functions are used when omitted.
    #[arg(long)]
    pub action_checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Architecture to check; all six when omitted.
    #[arg(long)]
    pub model: Option<Architecture>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tie_embeddings: bool,
    #[arg(long, default_value_t = lattn_core::tensor::DEFAULT_FD_STEP)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
pub struct DumpArgs {
    /// Latent Attention trigger-function checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Latent Attention action-function checkpoint.
    #[arg(long)]
    pub action_checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    /// JSONL output; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
