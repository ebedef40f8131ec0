//! Standard attention: `a = softmax(u^T E1)`, `o = E2 a`.

use super::{Model, PARAM_U};
use crate::embeddings::EmbedCache;
use crate::error::Result;
use crate::tensor::{ops, Grads, Tensor};

pub(super) struct StandardCache {
    e1: Tensor,
    c1: EmbedCache,
    e2: Tensor,
    c2: EmbedCache,
    weights: Vec<f64>,
}

impl StandardCache {
    pub(super) fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub(super) fn forward(model: &Model, ids: &[usize]) -> Result<(Vec<f64>, StandardCache)> {
    let u = model.params().get(PARAM_U)?.data();
    let (e1, c1) = model.embed(1, ids)?;
    let (e2, c2) = model.embed(2, ids)?;
    let scores: Vec<f64> = (0..ids.len()).map(|j| ops::dot(u, e1.row(j))).collect();
    let weights = ops::softmax(&scores);
    let mut output = vec![0.0; e2.cols()];
    for (j, &a) in weights.iter().enumerate() {
        ops::axpy(a, e2.row(j), &mut output);
    }
    Ok((
        output,
        StandardCache {
            e1,
            c1,
            e2,
            c2,
            weights,
        },
    ))
}

pub(super) fn backward(
    model: &Model,
    ids: &[usize],
    cache: &StandardCache,
    d_output: &[f64],
    grads: &mut Grads,
) -> Result<()> {
    let u = model.params().get(PARAM_U)?.data().to_vec();
    let len = ids.len();
    let width = cache.e2.cols();
    let mut d_e2 = Tensor::zeros(&[len, width]);
    let mut d_weights = vec![0.0; len];
    for j in 0..len {
        ops::axpy(cache.weights[j], d_output, d_e2.row_mut(j));
        d_weights[j] = ops::dot(cache.e2.row(j), d_output);
    }
    let d_scores = ops::softmax_backward(&cache.weights, &d_weights);
    let mut d_e1 = Tensor::zeros(&[len, width]);
    let d_u = grads.get_mut(PARAM_U)?.data_mut();
    for (j, &g) in d_scores.iter().enumerate() {
        ops::axpy(g, cache.e1.row(j), d_u);
        ops::axpy(g, &u, d_e1.row_mut(j));
    }
    model.embed_backward(1, ids, &cache.c1, &d_e1, grads)?;
    model.embed_backward(2, ids, &cache.c2, &d_e2, grads)
}
