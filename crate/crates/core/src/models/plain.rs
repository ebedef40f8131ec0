//! No-attention baselines. Dictionary: sum of token embeddings. BDLSTM:
//! final forward state concatenated with final backward state.

use super::Model;
use crate::embeddings::{EmbedCache, EmbeddingKind};
use crate::error::Result;
use crate::tensor::{ops, Grads, Tensor};

pub(super) struct PlainCache {
    shape: [usize; 2],
    c1: EmbedCache,
}

pub(super) fn forward(model: &Model, ids: &[usize]) -> Result<(Vec<f64>, PlainCache)> {
    let (e1, c1) = model.embed(1, ids)?;
    let len = ids.len();
    let width = e1.cols();
    let output = match model.config().arch.embedding {
        EmbeddingKind::Dict => {
            let mut sum = vec![0.0; width];
            for j in 0..len {
                ops::axpy(1.0, e1.row(j), &mut sum);
            }
            sum
        }
        EmbeddingKind::Bdlstm => {
            let m = width / 2;
            // forward LSTM ends at position J-1, backward LSTM at position 0
            ops::concat(&e1.row(len - 1)[..m], &e1.row(0)[m..])
        }
    };
    Ok((
        output,
        PlainCache {
            shape: [len, width],
            c1,
        },
    ))
}

pub(super) fn backward(
    model: &Model,
    ids: &[usize],
    cache: &PlainCache,
    d_output: &[f64],
    grads: &mut Grads,
) -> Result<()> {
    let [len, width] = cache.shape;
    let mut d_e1 = Tensor::zeros(&[len, width]);
    match model.config().arch.embedding {
        EmbeddingKind::Dict => {
            for j in 0..len {
                d_e1.row_mut(j).copy_from_slice(d_output);
            }
        }
        EmbeddingKind::Bdlstm => {
            let m = width / 2;
            ops::axpy(1.0, &d_output[..m], &mut d_e1.row_mut(len - 1)[..m]);
            ops::axpy(1.0, &d_output[m..], &mut d_e1.row_mut(0)[m..]);
        }
    }
    model.embed_backward(1, ids, &cache.c1, &d_e1, grads)
}
