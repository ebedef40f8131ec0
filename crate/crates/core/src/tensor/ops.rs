//! Vector and matrix kernels over slices and [`Tensor`]s.
//!
//! Matrices follow the row-major [`Tensor`] layout. Backward helpers take
//! the forward output plus the upstream gradient and return the gradient of
//! the forward input.

use super::Tensor;
use crate::error::{Error, Result};

pub const NORM_EPS: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln()
}

/// Gradient of the softmax input given its output `probs` and `d_probs`.
pub fn softmax_backward(probs: &[f64], d_probs: &[f64]) -> Vec<f64> {
    let inner = dot(probs, d_probs);
    probs
        .iter()
        .zip(d_probs)
        .map(|(p, g)| p * (g - inner))
        .collect()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    l2_normalize_eps(v, NORM_EPS)
}

pub fn l2_normalize_eps(v: &[f64], eps: f64) -> Result<Vec<f64>> {
    let norm = l2_norm(v);
    if !(norm > eps) {
        return Err(Error::Numeric(format!(
            "cannot normalize vector with norm {norm:e}"
        )));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Exact Jacobian-vector product of `v / ||v||`:
/// `(I / ||v|| - v v^T / ||v||^3) d_out`.
pub fn l2_normalize_backward(v: &[f64], d_out: &[f64]) -> Vec<f64> {
    let norm = l2_norm(v);
    let proj = dot(v, d_out) / (norm * norm * norm);
    v.iter()
        .zip(d_out)
        .map(|(x, g)| g / norm - x * proj)
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `m v` for `m` of shape `[r, c]` and `v` of length `c`.
pub fn matvec(m: &Tensor, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.cols(), v.len());
    (0..m.rows()).map(|i| dot(m.row(i), v)).collect()
}

/// `m^T v` for `m` of shape `[r, c]` and `v` of length `r`.
pub fn matvec_t(m: &Tensor, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.rows(), v.len());
    let mut out = vec![0.0; m.cols()];
    for (i, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            axpy(vi, m.row(i), &mut out);
        }
    }
    out
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.cols() != b.rows() {
        return Err(Error::Config(format!(
            "matmul shape mismatch {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Tensor::zeros(&[a.rows(), b.cols()]);
    for i in 0..a.rows() {
        let a_row = a.row(i).to_vec();
        let out_row = out.row_mut(i);
        for (k, &aik) in a_row.iter().enumerate() {
            axpy(aik, b.row(k), out_row);
        }
    }
    Ok(out)
}

/// `m += alpha * a b^T`
pub fn add_outer(m: &mut Tensor, alpha: f64, a: &[f64], b: &[f64]) {
    debug_assert_eq!(m.rows(), a.len());
    debug_assert_eq!(m.cols(), b.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai != 0.0 {
            axpy(alpha * ai, b, m.row_mut(i));
        }
    }
}

pub fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// Embedding lookup: row `ids[j]` of `table` becomes row `j` of the result.
/// `skip` (the padding id) always yields a zero row.
pub fn row_select(table: &Tensor, ids: &[usize], skip: Option<usize>) -> Result<Tensor> {
    let width = table.cols();
    let mut out = Tensor::zeros(&[ids.len(), width]);
    for (j, &id) in ids.iter().enumerate() {
        if id >= table.rows() {
            return Err(Error::Config(format!(
                "id {id} out of range for table of {} rows",
                table.rows()
            )));
        }
        if Some(id) != skip {
            out.row_mut(j).copy_from_slice(table.row(id));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_uniform() {
        let p = softmax(&[0.0, 0.0, 0.0]);
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_large_logits() {
        let p = softmax(&[1000.0, 0.0]);
        assert_eq!(p[0], 1.0);
        assert!(p[1] >= 0.0 && p[1] < 1e-300);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(l2_normalize(&[3.0, 4.0]).unwrap(), vec![0.6, 0.8]);
        assert_eq!(l2_normalize(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
        assert!(matches!(l2_normalize(&[0.0, 0.0]), Err(Error::Numeric(_))));
    }

    #[test]
    fn normalize_backward_matches_differences() {
        let v = [0.3, -1.2, 0.7];
        let g = [0.5, 0.1, -0.4];
        let analytic = l2_normalize_backward(&v, &g);
        let h = 1e-6;
        for k in 0..3 {
            let mut plus = v;
            let mut minus = v;
            plus[k] += h;
            minus[k] -= h;
            let fp = dot(&l2_normalize(&plus).unwrap(), &g);
            let fm = dot(&l2_normalize(&minus).unwrap(), &g);
            assert!((analytic[k] - (fp - fm) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_matvec() {
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.row_mut(i)[i] = 1.0;
        }
        assert_eq!(matvec(&eye, &[1.0, -2.0, 5.0]), vec![1.0, -2.0, 5.0]);
        let m = Tensor::from_vec(&[3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(matmul(&eye, &m).unwrap(), m);
        assert_eq!(matvec_t(&m, &[1.0, 0.0, 1.0]), vec![6.0, 8.0]);
    }

    #[test]
    fn lookup_and_pad() {
        let table = Tensor::from_vec(&[3, 2], vec![9.0, 9.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = row_select(&table, &[2, 0, 1], Some(0)).unwrap();
        assert_eq!(out.data(), &[3.0, 4.0, 0.0, 0.0, 1.0, 2.0]);
        assert!(row_select(&table, &[3], Some(0)).is_err());
    }

    #[test]
    fn sigmoid_symmetric() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
    }
}
