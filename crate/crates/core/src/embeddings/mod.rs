//! Token embeddings: a learned dictionary lookup, or a bidirectional LSTM
//! run over looked-up word vectors.
//!
//! Embedded sequences are `[J, width]` tensors: row `j` is the embedding of
//! token `j`.

mod dict;
mod lstm;

pub use dict::{dict_embed, dict_embed_backward};
pub use lstm::{
    bdlstm_backward, bdlstm_embed, lstm_cell, lstm_cell_backward, lstm_weight_shape, run_lstm,
    run_lstm_backward, BdlstmCache, CellCache, Direction, SequenceCache,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::PAD_ID;
use crate::error::Result;
use crate::tensor::{Grads, ParamStore, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Dict,
    Bdlstm,
}

/// Sizes shared by every embedding set of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingDims {
    pub vocab_size: usize,
    /// Output width of a dictionary embedding.
    pub dim: usize,
    /// Word-vector width fed to the LSTMs.
    pub input_dim: usize,
    /// Hidden size of each LSTM direction.
    pub hidden: usize,
}

/// One embedding parameter set (θ₁, θ₂ or θ₃ of a model).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmbeddingSet {
    Dict {
        table: String,
    },
    Bdlstm {
        wordvec: String,
        fwd: String,
        bwd: String,
    },
}

pub enum EmbedCache {
    Dict,
    Bdlstm(BdlstmCache),
}

impl EmbeddingSet {
    pub fn new(kind: EmbeddingKind, index: usize) -> Self {
        match kind {
            EmbeddingKind::Dict => EmbeddingSet::Dict {
                table: format!("embed.dict.theta{index}"),
            },
            EmbeddingKind::Bdlstm => EmbeddingSet::Bdlstm {
                wordvec: format!("embed.bdlstm.wordvec{index}"),
                fwd: format!("embed.bdlstm.fwd{index}"),
                bwd: format!("embed.bdlstm.bwd{index}"),
            },
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            EmbeddingSet::Dict { table } => vec![table.clone()],
            EmbeddingSet::Bdlstm { wordvec, fwd, bwd } => {
                vec![wordvec.clone(), fwd.clone(), bwd.clone()]
            }
        }
    }

    /// Adds freshly initialized parameters; word tables get a zero PAD row.
    pub fn init<R: Rng + ?Sized>(
        &self,
        store: &mut ParamStore,
        dims: EmbeddingDims,
        range: f64,
        rng: &mut R,
    ) -> Result<()> {
        match self {
            EmbeddingSet::Dict { table } => {
                store.insert(
                    table.clone(),
                    word_table(dims.vocab_size, dims.dim, range, rng),
                )?;
            }
            EmbeddingSet::Bdlstm { wordvec, fwd, bwd } => {
                store.insert(
                    wordvec.clone(),
                    word_table(dims.vocab_size, dims.input_dim, range, rng),
                )?;
                let shape = lstm_weight_shape(dims.input_dim, dims.hidden);
                store.insert(fwd.clone(), Tensor::uniform(&shape, range, rng))?;
                store.insert(bwd.clone(), Tensor::uniform(&shape, range, rng))?;
            }
        }
        Ok(())
    }

    pub fn forward(&self, params: &ParamStore, ids: &[usize]) -> Result<(Tensor, EmbedCache)> {
        match self {
            EmbeddingSet::Dict { table } => {
                Ok((dict_embed(ids, params.get(table)?)?, EmbedCache::Dict))
            }
            EmbeddingSet::Bdlstm { wordvec, fwd, bwd } => {
                let (out, cache) = bdlstm_embed(
                    ids,
                    params.get(wordvec)?,
                    params.get(fwd)?,
                    params.get(bwd)?,
                )?;
                Ok((out, EmbedCache::Bdlstm(cache)))
            }
        }
    }

    /// Accumulates parameter gradients given `d_out`, the gradient of the
    /// embedded `[J, width]` matrix.
    pub fn backward(
        &self,
        params: &ParamStore,
        ids: &[usize],
        cache: &EmbedCache,
        d_out: &Tensor,
        grads: &mut Grads,
    ) -> Result<()> {
        match (self, cache) {
            (EmbeddingSet::Dict { table }, EmbedCache::Dict) => {
                dict_embed_backward(ids, d_out, grads.get_mut(table)?);
                Ok(())
            }
            (EmbeddingSet::Bdlstm { wordvec, fwd, bwd }, EmbedCache::Bdlstm(cache)) => {
                let dx_fwd = bdlstm_backward(
                    cache,
                    Direction::Forward,
                    params.get(fwd)?,
                    d_out,
                    grads.get_mut(fwd)?,
                );
                let dx_bwd = bdlstm_backward(
                    cache,
                    Direction::Backward,
                    params.get(bwd)?,
                    d_out,
                    grads.get_mut(bwd)?,
                );
                let d_words = grads.get_mut(wordvec)?;
                dict_embed_backward(ids, &dx_fwd, d_words);
                dict_embed_backward(ids, &dx_bwd, d_words);
                Ok(())
            }
            _ => unreachable!("embedding cache does not match its set"),
        }
    }
}

fn word_table<R: Rng + ?Sized>(vocab: usize, width: usize, range: f64, rng: &mut R) -> Tensor {
    let mut t = Tensor::uniform(&[vocab, width], range, rng);
    if vocab > PAD_ID {
        t.row_mut(PAD_ID).fill(0.0);
    }
    t
}
