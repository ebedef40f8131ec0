use super::{Grads, ParamStore};
use crate::error::Result;

/// Step of the five-point stencil. Its truncation error is O(h^4), so a
/// step this large keeps both truncation and cancellation error near 1e-12
/// for losses of order one.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    /// Analytic and numeric values at the worst entry.
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub checked: usize,
}

/// Compares `analytic` against fourth-order central differences
/// `(-L(x+2h) + 8L(x+h) - 8L(x-h) + L(x-2h)) / 12h` of `loss` for every
/// entry of every non-frozen parameter. The error of one entry is
/// `|a - n| / max(|a|, |n|, 1e-8)`; the report carries the maximum.
pub fn grad_check<F>(
    params: &ParamStore,
    analytic: &Grads,
    eps: f64,
    mut loss: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: 0,
    };
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        if params.is_frozen(&name) {
            continue;
        }
        let grad = analytic.get(&name)?.data().to_vec();
        for (idx, &a) in grad.iter().enumerate() {
            let original = params.get(&name)?.data()[idx];
            let mut at = |offset: f64| -> Result<f64> {
                probe.get_mut(&name)?.data_mut()[idx] = original + offset;
                loss(&probe)
            };
            let (p2, p1, m1, m2) = (at(2.0 * eps)?, at(eps)?, at(-eps)?, at(-2.0 * eps)?);
            probe.get_mut(&name)?.data_mut()[idx] = original;

            let numeric = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = name.clone();
                report.worst_index = idx;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn half_squared_norm() {
        let mut store = ParamStore::new();
        store
            .insert("theta", Tensor::vector(vec![0.5, -1.5, 2.0]))
            .unwrap();
        let mut grads = Grads::zeros_like(&store);
        // d/dθ ½‖θ‖² = θ
        grads
            .get_mut("theta")
            .unwrap()
            .data_mut()
            .copy_from_slice(&[0.5, -1.5, 2.0]);
        let report = grad_check(&store, &grads, DEFAULT_FD_STEP, |p| {
            Ok(0.5 * p.get("theta")?.sq_norm())
        })
        .unwrap();
        assert_eq!(report.checked, 3);
        assert!(report.max_rel_error < 1e-9, "{report:?}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut store = ParamStore::new();
        store.insert("theta", Tensor::vector(vec![1.0])).unwrap();
        let mut grads = Grads::zeros_like(&store);
        grads.get_mut("theta").unwrap().data_mut()[0] = 3.0;
        let report = grad_check(&store, &grads, DEFAULT_FD_STEP, |p| {
            Ok(0.5 * p.get("theta")?.sq_norm())
        })
        .unwrap();
        assert!(report.max_rel_error > 0.5);
    }

    #[test]
    fn skips_frozen() {
        let mut store = ParamStore::new();
        store.insert("theta", Tensor::vector(vec![1.0])).unwrap();
        store.set_frozen("theta", true).unwrap();
        let grads = Grads::zeros_like(&store);
        let report = grad_check(&store, &grads, DEFAULT_FD_STEP, |p| {
            Ok(p.get("theta")?.sq_norm())
        })
        .unwrap();
        assert_eq!(report.checked, 0);
    }
}
