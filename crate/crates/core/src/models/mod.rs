//! The six classifiers: {dictionary, BDLSTM} embeddings x {no attention,
//! standard attention, Latent Attention}, all sharing a bias-free softmax
//! prediction head `softmax(P o)` and negative log-likelihood loss.

mod bundle;
mod latent;
mod plain;
mod standard;

pub use bundle::Bundle;
pub use latent::ForwardDiagnostics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSpace, DEFAULT_SEQ_LEN};
use crate::embeddings::{EmbedCache, EmbeddingDims, EmbeddingKind, EmbeddingSet};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::tensor::{grad_check, ops, GradCheckReport, Grads, ParamStore, Tensor};

pub const PARAM_U: &str = "attn.u";
pub const PARAM_V: &str = "attn.V";
pub const PARAM_P: &str = "head.P";
pub const DEFAULT_DIM: usize = 50;
pub const DEFAULT_INIT_RANGE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionKind {
    None,
    Standard,
    Latent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Architecture {
    pub embedding: EmbeddingKind,
    pub attention: AttentionKind,
}

impl Architecture {
    pub const fn new(embedding: EmbeddingKind, attention: AttentionKind) -> Self {
        Architecture {
            embedding,
            attention,
        }
    }

    pub fn all() -> [Architecture; 6] {
        use AttentionKind::*;
        use EmbeddingKind::*;
        [
            Self::new(Dict, None),
            Self::new(Dict, Standard),
            Self::new(Dict, Latent),
            Self::new(Bdlstm, None),
            Self::new(Bdlstm, Standard),
            Self::new(Bdlstm, Latent),
        ]
    }

    pub fn has_attention(self) -> bool {
        self.attention != AttentionKind::None
    }

    /// Number of embedding parameter sets the graph reads.
    pub fn embedding_sets(self) -> usize {
        match self.attention {
            AttentionKind::None => 1,
            AttentionKind::Standard => 2,
            AttentionKind::Latent => 3,
        }
    }

    /// Short label used in result tables, e.g. `BDLSTM+LA`.
    pub fn label(self) -> String {
        let base = match self.embedding {
            EmbeddingKind::Dict => "Dict",
            EmbeddingKind::Bdlstm => "BDLSTM",
        };
        match self.attention {
            AttentionKind::None => base.to_string(),
            AttentionKind::Standard => format!("{base}+A"),
            AttentionKind::Latent => format!("{base}+LA"),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let emb = match self.embedding {
            EmbeddingKind::Dict => "dict",
            EmbeddingKind::Bdlstm => "bdlstm",
        };
        let att = match self.attention {
            AttentionKind::None => "none",
            AttentionKind::Standard => "attn",
            AttentionKind::Latent => "latent",
        };
        write!(f, "{emb}-{att}")
    }
}

impl FromStr for Architecture {
    type Err = Error;

    /// Accepts `dict-latent` style names and table labels like `BDLSTM+A`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (emb, att) = match lower.split_once(['-', '+']) {
            Some((e, a)) => (e, a),
            None => (lower.as_str(), "none"),
        };
        let embedding = match emb {
            "dict" => EmbeddingKind::Dict,
            "bdlstm" => EmbeddingKind::Bdlstm,
            _ => return Err(Error::Config(format!("unknown architecture {s:?}"))),
        };
        let attention = match att {
            "none" => AttentionKind::None,
            "attn" | "a" | "standard" => AttentionKind::Standard,
            "latent" | "la" => AttentionKind::Latent,
            _ => return Err(Error::Config(format!("unknown architecture {s:?}"))),
        };
        Ok(Architecture {
            embedding,
            attention,
        })
    }
}

impl TryFrom<String> for Architecture {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Architecture> for String {
    fn from(a: Architecture) -> Self {
        a.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub vocab_size: usize,
    /// Input length J.
    pub seq_len: usize,
    /// Embedding width d.
    pub dim: usize,
    /// BDLSTM word-vector width.
    pub input_dim: usize,
    /// BDLSTM hidden size per direction; `2 * hidden` must equal `dim`.
    pub hidden: usize,
    /// Number of function classes M.
    pub classes: usize,
    /// Share one embedding parameter set across θ₁, θ₂, θ₃.
    pub tie_embeddings: bool,
    /// Divide the active weights by their L2 norm before the output sum.
    pub normalize_active: bool,
}

impl ModelConfig {
    pub fn new(arch: Architecture, vocab_size: usize, classes: usize) -> Self {
        ModelConfig {
            arch,
            vocab_size,
            seq_len: DEFAULT_SEQ_LEN,
            dim: DEFAULT_DIM,
            input_dim: DEFAULT_DIM,
            hidden: DEFAULT_DIM / 2,
            classes,
            tie_embeddings: false,
            normalize_active: true,
        }
    }

    /// Sets `dim` and derives the BDLSTM sizes from it.
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self.input_dim = dim;
        self.hidden = dim / 2;
        self
    }

    pub fn with_seq_len(mut self, seq_len: usize) -> Self {
        self.seq_len = seq_len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.vocab_size < 2 {
            return fail(format!(
                "vocab_size {} leaves no room for PAD/UNK",
                self.vocab_size
            ));
        }
        if self.seq_len == 0 || self.dim == 0 || self.classes == 0 {
            return fail(format!(
                "seq_len, dim and classes must be positive (got {}, {}, {})",
                self.seq_len, self.dim, self.classes
            ));
        }
        if self.arch.embedding == EmbeddingKind::Bdlstm {
            if self.hidden == 0 || self.input_dim == 0 {
                return fail("BDLSTM hidden and input sizes must be positive".into());
            }
            if 2 * self.hidden != self.dim {
                return fail(format!(
                    "BDLSTM width 2*{} does not match dim {}",
                    self.hidden, self.dim
                ));
            }
        }
        Ok(())
    }

    fn embedding_dims(&self) -> EmbeddingDims {
        EmbeddingDims {
            vocab_size: self.vocab_size,
            dim: self.dim,
            input_dim: self.input_dim,
            hidden: self.hidden,
        }
    }
}

/// A classifier's configuration together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
}

/// Attention read-outs of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub enum Attention {
    None,
    Standard { weights: Vec<f64> },
    Latent(ForwardDiagnostics),
}

/// Output of a forward pass plus what its backward pass needs.
pub struct Forward {
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    pub attention: Attention,
    output: Vec<f64>,
    cache: Cache,
}

impl Forward {
    /// The vector fed to the output layer.
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

enum Cache {
    Plain(plain::PlainCache),
    Standard(standard::StandardCache),
    Latent(latent::LatentCache),
}

impl Model {
    /// Initializes every weight uniformly in `[-init_range, init_range]`
    /// from the `Init` substream of `seed`; PAD rows start (and stay) zero.
    pub fn init(config: ModelConfig, init_range: f64, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, Stream::Init);
        let mut params = ParamStore::new();
        let dims = config.embedding_dims();
        let distinct_sets = if config.tie_embeddings {
            1
        } else {
            config.arch.embedding_sets()
        };
        for k in 1..=distinct_sets {
            EmbeddingSet::new(config.arch.embedding, k).init(
                &mut params,
                dims,
                init_range,
                &mut rng,
            )?;
        }
        if config.arch.has_attention() {
            params.insert(
                PARAM_U,
                Tensor::uniform(&[config.dim], init_range, &mut rng),
            )?;
        }
        if config.arch.attention == AttentionKind::Latent {
            params.insert(
                PARAM_V,
                Tensor::uniform(&[config.seq_len, config.dim], init_range, &mut rng),
            )?;
        }
        params.insert(
            PARAM_P,
            Tensor::uniform(&[config.classes, config.dim], init_range, &mut rng),
        )?;
        Ok(Model { config, params })
    }

    /// Wraps existing parameters after checking they match `config`.
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let reference = Model::init(config.clone(), 0.0, 0)?;
        for (name, p) in reference.params.iter() {
            let actual = params.get(name)?;
            if actual.shape() != p.tensor.shape() {
                return Err(Error::Config(format!(
                    "parameter {name:?} has shape {:?}, expected {:?}",
                    actual.shape(),
                    p.tensor.shape()
                )));
            }
        }
        if params.len() != reference.params.len() {
            return Err(Error::Config(format!(
                "expected {} parameters, found {}",
                reference.params.len(),
                params.len()
            )));
        }
        Ok(Model { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    /// Embedding set θ_k (1-based). With tied embeddings every k maps to θ₁.
    pub fn embedding_set(&self, k: usize) -> EmbeddingSet {
        let k = if self.config.tie_embeddings { 1 } else { k };
        EmbeddingSet::new(self.config.arch.embedding, k)
    }

    /// Resolves a logical parameter group (`theta1`..`theta3`, `u`, `V`,
    /// `P`) or a literal parameter name to parameter names.
    pub fn group_params(&self, group: &str) -> Result<Vec<String>> {
        let sets = self.config.arch.embedding_sets();
        let names = match group {
            "theta1" | "theta2" | "theta3" => {
                let k: usize = group[5..].parse().expect("digit suffix");
                if k > sets {
                    return Err(Error::Config(format!(
                        "{} has no embedding set {group}",
                        self.config.arch
                    )));
                }
                self.embedding_set(k).param_names()
            }
            "u" => vec![PARAM_U.to_string()],
            "V" => vec![PARAM_V.to_string()],
            "P" => vec![PARAM_P.to_string()],
            other => vec![other.to_string()],
        };
        for name in &names {
            if !self.params.contains(name) {
                return Err(Error::Config(format!(
                    "{} has no parameter {name:?}",
                    self.config.arch
                )));
            }
        }
        Ok(names)
    }

    fn check_input(&self, ids: &[usize]) -> Result<()> {
        if ids.len() != self.config.seq_len {
            return Err(Error::Config(format!(
                "input has length {}, model expects {}",
                ids.len(),
                self.config.seq_len
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(Error::Config(format!(
                "token id {bad} >= vocab size {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }

    pub(crate) fn embed(&self, k: usize, ids: &[usize]) -> Result<(Tensor, EmbedCache)> {
        self.embedding_set(k).forward(&self.params, ids)
    }

    pub(crate) fn embed_backward(
        &self,
        k: usize,
        ids: &[usize],
        cache: &EmbedCache,
        d_out: &Tensor,
        grads: &mut Grads,
    ) -> Result<()> {
        self.embedding_set(k)
            .backward(&self.params, ids, cache, d_out, grads)
    }

    pub fn forward(&self, ids: &[usize]) -> Result<Forward> {
        self.check_input(ids)?;
        let (output, cache, attention) = match self.config.arch.attention {
            AttentionKind::None => {
                let (o, c) = plain::forward(self, ids)?;
                (o, Cache::Plain(c), Attention::None)
            }
            AttentionKind::Standard => {
                let (o, c) = standard::forward(self, ids)?;
                let weights = c.weights().to_vec();
                (o, Cache::Standard(c), Attention::Standard { weights })
            }
            AttentionKind::Latent => {
                let (o, c) = latent::forward(self, ids, self.config.normalize_active)?;
                let diag = c.diagnostics(&o);
                (o, Cache::Latent(c), Attention::Latent(diag))
            }
        };
        let logits = ops::matvec(self.params.get(PARAM_P)?, &output);
        let probs = ops::softmax(&logits);
        let attention = match attention {
            Attention::Latent(mut d) => {
                d.probs = probs.clone();
                Attention::Latent(d)
            }
            other => other,
        };
        Ok(Forward {
            probs,
            logits,
            attention,
            output,
            cache,
        })
    }

    pub fn predict_proba(&self, ids: &[usize]) -> Result<Vec<f64>> {
        Ok(self.forward(ids)?.probs)
    }

    /// Negative log-likelihood of `gold` for a recorded forward pass.
    pub fn loss(forward: &Forward, gold: usize) -> Result<f64> {
        let logit = forward.logits.get(gold).ok_or(Error::UnknownLabel(gold))?;
        Ok(ops::log_sum_exp(&forward.logits) - logit)
    }

    /// Accumulates `scale * d loss / d params` into `grads`. Frozen
    /// parameters are not masked here; see [`Grads::mask_frozen`].
    pub fn backward(
        &self,
        ids: &[usize],
        forward: &Forward,
        gold: usize,
        scale: f64,
        grads: &mut Grads,
    ) -> Result<()> {
        if gold >= self.config.classes {
            return Err(Error::UnknownLabel(gold));
        }
        let mut d_logits: Vec<f64> = forward.probs.iter().map(|p| scale * p).collect();
        d_logits[gold] -= scale;
        ops::add_outer(grads.get_mut(PARAM_P)?, 1.0, &d_logits, &forward.output);
        let d_output = ops::matvec_t(self.params.get(PARAM_P)?, &d_logits);
        match &forward.cache {
            Cache::Plain(c) => plain::backward(self, ids, c, &d_output, grads),
            Cache::Standard(c) => standard::backward(self, ids, c, &d_output, grads),
            Cache::Latent(c) => latent::backward(self, ids, c, &d_output, grads),
        }
    }

    /// Forward plus backward for one example; returns the loss.
    pub fn loss_and_grad(
        &self,
        ids: &[usize],
        gold: usize,
        scale: f64,
        grads: &mut Grads,
    ) -> Result<f64> {
        let forward = self.forward(ids)?;
        let loss = Model::loss(&forward, gold)?;
        self.backward(ids, &forward, gold, scale, grads)?;
        Ok(loss)
    }

    /// Latent Attention read-outs (l, A, w, o, probs) for one input.
    pub fn latent_attention_forward(&self, ids: &[usize]) -> Result<ForwardDiagnostics> {
        match self.forward(ids)?.attention {
            Attention::Latent(d) => Ok(d),
            _ => Err(Error::Config(format!(
                "{} is not a Latent Attention model",
                self.config.arch
            ))),
        }
    }

    /// Class distribution and attention weights of a standard-attention model.
    pub fn standard_attention_forward(&self, ids: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = self.forward(ids)?;
        match f.attention {
            Attention::Standard { weights } => Ok((f.probs, weights)),
            _ => Err(Error::Config(format!(
                "{} is not a standard-attention model",
                self.config.arch
            ))),
        }
    }

    pub fn no_attention_forward(&self, ids: &[usize]) -> Result<Vec<f64>> {
        if self.config.arch.has_attention() {
            return Err(Error::Config(format!(
                "{} uses attention",
                self.config.arch
            )));
        }
        self.predict_proba(ids)
    }
}

/// Records one forward pass so that exactly one backward pass can follow.
pub struct Pass<'m> {
    model: &'m Model,
    recorded: Option<(Vec<usize>, Forward, usize)>,
}

impl<'m> Pass<'m> {
    pub fn new(model: &'m Model) -> Self {
        Pass {
            model,
            recorded: None,
        }
    }

    /// Runs the forward pass and returns the loss for `gold`.
    pub fn forward(&mut self, ids: &[usize], gold: usize) -> Result<f64> {
        let forward = self.model.forward(ids)?;
        let loss = Model::loss(&forward, gold)?;
        self.recorded = Some((ids.to_vec(), forward, gold));
        Ok(loss)
    }

    /// Gradients of the recorded loss; frozen parameters get zeros.
    /// Consumes the recording, so a second call without a new forward fails.
    pub fn backward(&mut self) -> Result<Grads> {
        let (ids, forward, gold) = self.recorded.take().ok_or(Error::NoForward)?;
        let mut grads = Grads::zeros_like(self.model.params());
        self.model.backward(&ids, &forward, gold, 1.0, &mut grads)?;
        grads.mask_frozen(self.model.params());
        Ok(grads)
    }
}

/// Index of the largest probability; ties go to the lowest index.
pub fn predict_label(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// The channel owning the predicted function.
pub fn predict_channel(function_id: usize, labels: &LabelSpace) -> Result<&str> {
    labels.channel(function_id)
}

/// Summed negative log-likelihood over `examples` (pairs of ids and gold label).
pub fn batch_loss(model: &Model, examples: &[(Vec<usize>, usize)]) -> Result<f64> {
    examples.iter().try_fold(0.0, |acc, (ids, gold)| {
        Ok(acc + Model::loss(&model.forward(ids)?, *gold)?)
    })
}

/// Checks the hand-written backward pass of `model` against central
/// differences of [`batch_loss`].
pub fn gradient_check(
    model: &Model,
    examples: &[(Vec<usize>, usize)],
    eps: f64,
) -> Result<GradCheckReport> {
    let mut grads = Grads::zeros_like(model.params());
    for (ids, gold) in examples {
        model.loss_and_grad(ids, *gold, 1.0, &mut grads)?;
    }
    grads.mask_frozen(model.params());
    let mut probe = model.clone();
    grad_check(model.params(), &grads, eps, |params| {
        probe.params = params.clone();
        batch_loss(&probe, examples)
    })
}

/// Init range for [`tiny_gradient_check`]. Wider than the training range so
/// that few gradient entries sit near the finite-difference noise floor.
pub const GRADCHECK_INIT_RANGE: f64 = 1.0;

/// Configuration used for gradient checks: N=20, J=5, d=4, m=2, M=3.
pub fn tiny_config(arch: Architecture) -> ModelConfig {
    let mut config = ModelConfig::new(arch, 20, 3).with_dim(4).with_seq_len(5);
    config.hidden = 2;
    config
}

/// Gradient check of one architecture on the tiny configuration, with
/// weights and a three-example batch drawn from `seed`.
pub fn tiny_gradient_check(
    arch: Architecture,
    tie_embeddings: bool,
    seed: u64,
    eps: f64,
) -> Result<GradCheckReport> {
    use rand::Rng;

    let mut config = tiny_config(arch);
    config.tie_embeddings = tie_embeddings;
    let model = Model::init(config, GRADCHECK_INIT_RANGE, seed)?;
    let mut rng = rng::stream(seed, Stream::Sampling);
    let examples: Vec<(Vec<usize>, usize)> = (0..3)
        .map(|k| {
            let mut ids: Vec<usize> = (0..3 + k % 3).map(|_| rng.gen_range(1..20)).collect();
            ids.resize(5, crate::corpus::PAD_ID);
            (ids, rng.gen_range(0..3))
        })
        .collect();
    gradient_check(&model, &examples, eps)
}
