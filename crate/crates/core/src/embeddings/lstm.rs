//! LSTM cell without peepholes and its bidirectional wrapper.
//!
//! Gates are stacked `(i, f, o, g)` in the rows of a single weight matrix of
//! shape `[4m, n + m + 1]` whose last column is the bias:
//!
//! ```text
//! (i, f, o, g) = (σ, σ, σ, tanh)(T [x_t; h_{t-1}; 1])
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use crate::corpus::PAD_ID;
use crate::error::{Error, Result};
use crate::tensor::{ops, Tensor};

pub fn lstm_weight_shape(input_dim: usize, hidden: usize) -> [usize; 2] {
    [4 * hidden, input_dim + hidden + 1]
}

/// Everything the backward pass of one cell step needs.
#[derive(Clone, Debug)]
pub struct CellCache {
    input: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn hidden_of(weight: &Tensor) -> usize {
    weight.rows() / 4
}

/// One LSTM step. Returns `(h_t, c_t, cache)`.
pub fn lstm_cell(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    weight: &Tensor,
) -> (Vec<f64>, Vec<f64>, CellCache) {
    let m = hidden_of(weight);
    debug_assert_eq!(weight.cols(), x.len() + m + 1);
    let mut input = Vec::with_capacity(weight.cols());
    input.extend_from_slice(x);
    input.extend_from_slice(h_prev);
    input.push(1.0);

    let z = ops::matvec(weight, &input);
    let i: Vec<f64> = z[..m].iter().map(|&v| ops::sigmoid(v)).collect();
    let f: Vec<f64> = z[m..2 * m].iter().map(|&v| ops::sigmoid(v)).collect();
    let o: Vec<f64> = z[2 * m..3 * m].iter().map(|&v| ops::sigmoid(v)).collect();
    let g: Vec<f64> = z[3 * m..].iter().map(|v| v.tanh()).collect();

    let c: Vec<f64> = (0..m).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..m).map(|k| o[k] * tanh_c[k]).collect();
    let cache = CellCache {
        input,
        i,
        f,
        o,
        g,
        c_prev: c_prev.to_vec(),
        tanh_c,
    };
    (h, c, cache)
}

/// Backward through one step. `dh` and `dc` are the gradients reaching
/// `h_t` and `c_t`; returns `(dx, dh_prev, dc_prev)` and accumulates into
/// `d_weight`.
pub fn lstm_cell_backward(
    cache: &CellCache,
    weight: &Tensor,
    dh: &[f64],
    dc: &[f64],
    d_weight: &mut Tensor,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = hidden_of(weight);
    let mut dz = vec![0.0; 4 * m];
    let mut dc_prev = vec![0.0; m];
    for k in 0..m {
        let (i, f, o, g, tc) = (
            cache.i[k],
            cache.f[k],
            cache.o[k],
            cache.g[k],
            cache.tanh_c[k],
        );
        let d_o = dh[k] * tc;
        let dc_total = dc[k] + dh[k] * o * (1.0 - tc * tc);
        let d_i = dc_total * g;
        let d_g = dc_total * i;
        let d_f = dc_total * cache.c_prev[k];
        dc_prev[k] = dc_total * f;
        dz[k] = d_i * i * (1.0 - i);
        dz[m + k] = d_f * f * (1.0 - f);
        dz[2 * m + k] = d_o * o * (1.0 - o);
        dz[3 * m + k] = d_g * (1.0 - g * g);
    }
    ops::add_outer(d_weight, 1.0, &dz, &cache.input);
    let d_input = ops::matvec_t(weight, &dz);
    let n = cache.input.len() - m - 1;
    (d_input[..n].to_vec(), d_input[n..n + m].to_vec(), dc_prev)
}

#[derive(Clone, Debug, Default)]
pub struct SequenceCache {
    cells: Vec<CellCache>,
}

/// Runs an LSTM from zero state over `inputs` in the given order and returns
/// the hidden state after each step.
pub fn run_lstm(inputs: &[&[f64]], weight: &Tensor) -> (Vec<Vec<f64>>, SequenceCache) {
    let m = hidden_of(weight);
    let mut h = vec![0.0; m];
    let mut c = vec![0.0; m];
    let mut hs = Vec::with_capacity(inputs.len());
    let mut cells = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (h_next, c_next, cache) = lstm_cell(x, &h, &c, weight);
        hs.push(h_next.clone());
        cells.push(cache);
        h = h_next;
        c = c_next;
    }
    (hs, SequenceCache { cells })
}

/// Backpropagation through time. `d_hs[t]` is the gradient reaching the
/// output of step `t` (same order as the forward run); returns the input
/// gradients in that order.
pub fn run_lstm_backward(
    cache: &SequenceCache,
    weight: &Tensor,
    d_hs: &[Vec<f64>],
    d_weight: &mut Tensor,
) -> Vec<Vec<f64>> {
    let m = hidden_of(weight);
    let mut dh_next = vec![0.0; m];
    let mut dc_next = vec![0.0; m];
    let mut dxs = vec![Vec::new(); cache.cells.len()];
    for t in (0..cache.cells.len()).rev() {
        let dh: Vec<f64> = d_hs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let (dx, dh_prev, dc_prev) =
            lstm_cell_backward(&cache.cells[t], weight, &dh, &dc_next, d_weight);
        dxs[t] = dx;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dxs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

pub struct BdlstmCache {
    ids: Vec<usize>,
    hidden: usize,
    fwd: SequenceCache,
    bwd: SequenceCache,
}

/// Bidirectional LSTM embedding of `ids` as a `[J, 2m]` tensor. Row `t` is
/// `[h_fwd_t; h_bwd_t]`, where the backward LSTM reads the reversed sequence
/// and its outputs are re-reversed so that both halves describe position `t`.
pub fn bdlstm_embed(
    ids: &[usize],
    wordvec: &Tensor,
    fwd: &Tensor,
    bwd: &Tensor,
) -> Result<(Tensor, BdlstmCache)> {
    let m = hidden_of(fwd);
    if fwd.shape() != bwd.shape() || fwd.cols() != wordvec.cols() + m + 1 {
        return Err(Error::Config(format!(
            "inconsistent BDLSTM shapes: wordvec {:?}, fwd {:?}, bwd {:?}",
            wordvec.shape(),
            fwd.shape(),
            bwd.shape()
        )));
    }
    let words = ops::row_select(wordvec, ids, Some(PAD_ID))?;
    let forward_inputs: Vec<&[f64]> = (0..ids.len()).map(|t| words.row(t)).collect();
    let reversed_inputs: Vec<&[f64]> = forward_inputs.iter().rev().copied().collect();
    let (hf, fwd_cache) = run_lstm(&forward_inputs, fwd);
    let (hb_rev, bwd_cache) = run_lstm(&reversed_inputs, bwd);

    let len = ids.len();
    let mut out = Tensor::zeros(&[len, 2 * m]);
    for t in 0..len {
        let row = out.row_mut(t);
        row[..m].copy_from_slice(&hf[t]);
        row[m..].copy_from_slice(&hb_rev[len - 1 - t]);
    }
    let cache = BdlstmCache {
        ids: ids.to_vec(),
        hidden: m,
        fwd: fwd_cache,
        bwd: bwd_cache,
    };
    Ok((out, cache))
}

/// Backward through one direction of [`bdlstm_embed`]. Accumulates into
/// `d_weight` and returns the `[J, n]` gradient of the word vectors, aligned
/// with the original token positions.
pub fn bdlstm_backward(
    cache: &BdlstmCache,
    direction: Direction,
    weight: &Tensor,
    d_out: &Tensor,
    d_weight: &mut Tensor,
) -> Tensor {
    let m = cache.hidden;
    let len = cache.ids.len();
    let input_dim = weight.cols() - m - 1;
    let mut d_words = Tensor::zeros(&[len, input_dim]);
    match direction {
        Direction::Forward => {
            let d_hs: Vec<Vec<f64>> = (0..len).map(|t| d_out.row(t)[..m].to_vec()).collect();
            let dxs = run_lstm_backward(&cache.fwd, weight, &d_hs, d_weight);
            for (t, dx) in dxs.iter().enumerate() {
                d_words.row_mut(t).copy_from_slice(dx);
            }
        }
        Direction::Backward => {
            let d_hs: Vec<Vec<f64>> = (0..len)
                .map(|s| d_out.row(len - 1 - s)[m..].to_vec())
                .collect();
            let dxs = run_lstm_backward(&cache.bwd, weight, &d_hs, d_weight);
            for (s, dx) in dxs.iter().enumerate() {
                d_words.row_mut(len - 1 - s).copy_from_slice(dx);
            }
        }
    }
    d_words
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Stream};

    #[test]
    fn zero_parameters_zero_state() {
        let w = Tensor::zeros(&lstm_weight_shape(3, 2));
        let (h, c, cache) = lstm_cell(&[0.3, -0.1, 0.9], &[0.0, 0.0], &[0.0, 0.0], &w);
        assert_eq!(cache.i, vec![0.5, 0.5]);
        assert_eq!(cache.f, vec![0.5, 0.5]);
        assert_eq!(cache.o, vec![0.5, 0.5]);
        assert_eq!(cache.g, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_parameters_carry_memory() {
        let w = Tensor::zeros(&lstm_weight_shape(1, 2));
        let v = [0.8, -2.0];
        let (h, c, _) = lstm_cell(&[1.0], &[0.4, 0.4], &v, &w);
        assert_eq!(c, vec![0.4, -1.0]);
        assert_eq!(h, vec![0.5 * (0.4f64).tanh(), 0.5 * (-1.0f64).tanh()]);
    }

    #[test]
    fn cell_gradients_match_differences() {
        let mut r = rng::stream(11, Stream::Init);
        let w = Tensor::uniform(&lstm_weight_shape(3, 2), 0.8, &mut r);
        let x = [0.3, -0.6, 0.2];
        let h0 = [0.1, -0.4];
        let c0 = [0.5, 0.3];
        // Scalar objective: a·h + b·c
        let a = [0.7, -1.1];
        let b = [0.2, 0.9];
        let objective = |w: &Tensor, x: &[f64], h0: &[f64], c0: &[f64]| {
            let (h, c, _) = lstm_cell(x, h0, c0, w);
            ops::dot(&a, &h) + ops::dot(&b, &c)
        };
        let (_, _, cache) = lstm_cell(&x, &h0, &c0, &w);
        let mut dw = Tensor::zeros(w.shape());
        let (dx, dh0, dc0) = lstm_cell_backward(&cache, &w, &a, &b, &mut dw);

        let eps = 1e-6;
        let check = |analytic: f64, plus: f64, minus: f64| {
            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-6, "analytic {analytic} numeric {numeric}");
        };
        for k in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp.data_mut()[k] += eps;
            wm.data_mut()[k] -= eps;
            check(
                dw.data()[k],
                objective(&wp, &x, &h0, &c0),
                objective(&wm, &x, &h0, &c0),
            );
        }
        for k in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[k] += eps;
            xm[k] -= eps;
            check(
                dx[k],
                objective(&w, &xp, &h0, &c0),
                objective(&w, &xm, &h0, &c0),
            );
        }
        for k in 0..2 {
            let (mut hp, mut hm) = (h0, h0);
            hp[k] += eps;
            hm[k] -= eps;
            check(
                dh0[k],
                objective(&w, &x, &hp, &c0),
                objective(&w, &x, &hm, &c0),
            );
            let (mut cp, mut cm) = (c0, c0);
            cp[k] += eps;
            cm[k] -= eps;
            check(
                dc0[k],
                objective(&w, &x, &h0, &cp),
                objective(&w, &x, &h0, &cm),
            );
        }
    }

    fn random_bdlstm(seed: u64) -> (Tensor, Tensor, Tensor) {
        let mut r = rng::stream(seed, Stream::Init);
        let mut words = Tensor::uniform(&[6, 3], 0.5, &mut r);
        words.row_mut(PAD_ID).fill(0.0);
        let fwd = Tensor::uniform(&lstm_weight_shape(3, 2), 0.5, &mut r);
        let bwd = Tensor::uniform(&lstm_weight_shape(3, 2), 0.5, &mut r);
        (words, fwd, bwd)
    }

    #[test]
    fn single_token_halves_match_with_shared_weights() {
        let (words, fwd, _) = random_bdlstm(3);
        let (out, _) = bdlstm_embed(&[4], &words, &fwd, &fwd).unwrap();
        assert_eq!(&out.row(0)[..2], &out.row(0)[2..]);
    }

    #[test]
    fn all_pad_depends_only_on_biases() {
        let (words, fwd, bwd) = random_bdlstm(4);
        let (out, _) = bdlstm_embed(&[0, 0, 0], &words, &fwd, &bwd).unwrap();
        let mut no_bias = fwd.clone();
        let mut no_bias_b = bwd.clone();
        for r in 0..no_bias.rows() {
            let last = no_bias.cols() - 1;
            no_bias.row_mut(r)[last] = 0.0;
            no_bias_b.row_mut(r)[last] = 0.0;
        }
        let (zeroed, _) = bdlstm_embed(&[0, 0, 0], &words, &no_bias, &no_bias_b).unwrap();
        assert!(zeroed.data().iter().all(|&x| x == 0.0));
        assert!(out.data().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn palindrome_with_shared_weights() {
        let (words, fwd, _) = random_bdlstm(5);
        let ids = [2, 3, 2];
        let (out, _) = bdlstm_embed(&ids, &words, &fwd, &fwd).unwrap();
        for t in 0..3 {
            assert_eq!(&out.row(t)[..2], &out.row(2 - t)[2..]);
        }
    }

    #[test]
    fn reversal_with_swapped_directions() {
        let (words, fwd, bwd) = random_bdlstm(6);
        let ids = [2, 5, 3, 0];
        let rev: Vec<usize> = ids.iter().rev().copied().collect();
        let (a, _) = bdlstm_embed(&ids, &words, &fwd, &bwd).unwrap();
        let (b, _) = bdlstm_embed(&rev, &words, &bwd, &fwd).unwrap();
        for t in 0..4 {
            assert_eq!(&a.row(t)[..2], &b.row(3 - t)[2..]);
            assert_eq!(&a.row(t)[2..], &b.row(3 - t)[..2]);
        }
    }

    #[test]
    fn bounded_hidden_states() {
        let mut r = rng::stream(8, Stream::Init);
        let words = Tensor::uniform(&[6, 3], 2.0, &mut r);
        let fwd = Tensor::uniform(&lstm_weight_shape(3, 2), 2.0, &mut r);
        let (out, _) = bdlstm_embed(&[1, 2, 3, 4, 5], &words, &fwd, &fwd).unwrap();
        assert!(out.data().iter().all(|h| h.abs() < 1.0));
    }
}
