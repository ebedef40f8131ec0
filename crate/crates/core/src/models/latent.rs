//! Latent Attention:
//!
//! ```text
//! l   = softmax(u^T E1)            latent weights over J positions
//! A_i = softmax(V D_i)             one active-attention column per token
//! w   = A l                        active weights
//! o   = E3 w / ||w||               output representation
//! ```
//!
//! `E1`, `D`, `E3` come from embedding sets θ₁, θ₂, θ₃.

use super::{Model, PARAM_U, PARAM_V};
use crate::embeddings::EmbedCache;
use crate::error::Result;
use crate::tensor::{ops, Grads, Tensor};

/// Intermediate values of a Latent Attention forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardDiagnostics {
    /// Latent weights `l` (length J).
    pub latent: Vec<f64>,
    /// Active-attention columns: `active_columns[i]` is `A_i` (length J).
    pub active_columns: Vec<Vec<f64>>,
    /// Active weights `w = A l` (length J), before normalization.
    pub active: Vec<f64>,
    /// Output representation `o` (length d).
    pub output: Vec<f64>,
    /// Class distribution (length M).
    pub probs: Vec<f64>,
}

pub(super) struct LatentCache {
    e1: Tensor,
    c1: EmbedCache,
    e2: Tensor,
    c2: EmbedCache,
    e3: Tensor,
    c3: EmbedCache,
    latent: Vec<f64>,
    columns: Vec<Vec<f64>>,
    active: Vec<f64>,
    scaled: Vec<f64>,
    normalized: bool,
}

impl LatentCache {
    pub(super) fn diagnostics(&self, output: &[f64]) -> ForwardDiagnostics {
        ForwardDiagnostics {
            latent: self.latent.clone(),
            active_columns: self.columns.clone(),
            active: self.active.clone(),
            output: output.to_vec(),
            probs: Vec::new(),
        }
    }
}

pub(super) fn forward(
    model: &Model,
    ids: &[usize],
    normalize: bool,
) -> Result<(Vec<f64>, LatentCache)> {
    let params = model.params();
    let u = params.get(PARAM_U)?.data();
    let v = params.get(PARAM_V)?;
    let (e1, c1) = model.embed(1, ids)?;
    let (e2, c2) = model.embed(2, ids)?;
    let (e3, c3) = model.embed(3, ids)?;
    let len = ids.len();

    let scores: Vec<f64> = (0..len).map(|j| ops::dot(u, e1.row(j))).collect();
    let latent = ops::softmax(&scores);

    let columns: Vec<Vec<f64>> = (0..len)
        .map(|i| ops::softmax(&ops::matvec(v, e2.row(i))))
        .collect();
    let mut active = vec![0.0; len];
    for (i, column) in columns.iter().enumerate() {
        ops::axpy(latent[i], column, &mut active);
    }

    let scaled = if normalize {
        ops::l2_normalize(&active)?
    } else {
        active.clone()
    };
    let mut output = vec![0.0; e3.cols()];
    for (k, &weight) in scaled.iter().enumerate() {
        ops::axpy(weight, e3.row(k), &mut output);
    }
    let cache = LatentCache {
        e1,
        c1,
        e2,
        c2,
        e3,
        c3,
        latent,
        columns,
        active,
        scaled,
        normalized: normalize,
    };
    Ok((output, cache))
}

pub(super) fn backward(
    model: &Model,
    ids: &[usize],
    cache: &LatentCache,
    d_output: &[f64],
    grads: &mut Grads,
) -> Result<()> {
    let params = model.params();
    let u = params.get(PARAM_U)?.data().to_vec();
    let v = params.get(PARAM_V)?;
    let len = ids.len();
    let width = cache.e3.cols();

    // o = Σ_k scaled_k e3_k
    let mut d_e3 = Tensor::zeros(&[len, width]);
    let mut d_scaled = vec![0.0; len];
    for k in 0..len {
        ops::axpy(cache.scaled[k], d_output, d_e3.row_mut(k));
        d_scaled[k] = ops::dot(cache.e3.row(k), d_output);
    }
    let d_active = if cache.normalized {
        ops::l2_normalize_backward(&cache.active, &d_scaled)
    } else {
        d_scaled
    };

    // w = Σ_i l_i A_i
    let mut d_latent = vec![0.0; len];
    let mut d_e2 = Tensor::zeros(&[len, width]);
    let d_v = grads.get_mut(PARAM_V)?;
    for (i, column) in cache.columns.iter().enumerate() {
        d_latent[i] = ops::dot(column, &d_active);
        let d_column: Vec<f64> = d_active.iter().map(|g| cache.latent[i] * g).collect();
        let d_logits = ops::softmax_backward(column, &d_column);
        ops::add_outer(d_v, 1.0, &d_logits, cache.e2.row(i));
        d_e2.row_mut(i)
            .copy_from_slice(&ops::matvec_t(v, &d_logits));
    }

    // l = softmax(u^T E1)
    let d_scores = ops::softmax_backward(&cache.latent, &d_latent);
    let mut d_e1 = Tensor::zeros(&[len, width]);
    let d_u = grads.get_mut(PARAM_U)?.data_mut();
    for (j, &g) in d_scores.iter().enumerate() {
        ops::axpy(g, cache.e1.row(j), d_u);
        ops::axpy(g, &u, d_e1.row_mut(j));
    }

    model.embed_backward(1, ids, &cache.c1, &d_e1, grads)?;
    model.embed_backward(2, ids, &cache.c2, &d_e2, grads)?;
    model.embed_backward(3, ids, &cache.c3, &d_e3, grads)
}
