use std::collections::BTreeMap;

use super::config::AdamConfig;
use crate::error::Result;
use crate::tensor::{Grads, ParamStore};

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_gradients(grads: &mut Grads, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Clone, Debug)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Adam with bias-corrected moments. Frozen parameters are skipped
/// entirely: neither they nor their moments change.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    state: BTreeMap<String, Moments>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            state: BTreeMap::new(),
        }
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &Grads, lr: f64) -> Result<()> {
        let AdamConfig { beta1, beta2, eps } = self.config;
        for (name, param) in params.iter_mut() {
            if param.frozen {
                continue;
            }
            let grad = grads.get(name)?.data();
            let moments = self
                .state
                .entry(name.to_string())
                .or_insert_with(|| Moments {
                    m: vec![0.0; grad.len()],
                    v: vec![0.0; grad.len()],
                    t: 0,
                });
            moments.t += 1;
            let c1 = 1.0 - beta1.powi(moments.t);
            let c2 = 1.0 - beta2.powi(moments.t);
            let values = param.tensor.data_mut();
            for k in 0..grad.len() {
                let g = grad[k];
                moments.m[k] = beta1 * moments.m[k] + (1.0 - beta1) * g;
                moments.v[k] = beta2 * moments.v[k] + (1.0 - beta2) * g * g;
                let m_hat = moments.m[k] / c1;
                let v_hat = moments.v[k] / c2;
                values[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn store(values: Vec<f64>) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("w", Tensor::vector(values)).unwrap();
        s
    }

    fn grads_for(s: &ParamStore, values: &[f64]) -> Grads {
        let mut g = Grads::zeros_like(s);
        g.get_mut("w").unwrap().data_mut().copy_from_slice(values);
        g
    }

    #[test]
    fn clipping() {
        let s = store(vec![0.0; 2]);
        let mut g = grads_for(&s, &[48.0, 64.0]); // norm 80
        assert_eq!(clip_gradients(&mut g, 40.0), 80.0);
        assert_eq!(g.get("w").unwrap().data(), &[24.0, 32.0]);

        let mut small = grads_for(&s, &[6.0, 8.0]); // norm 10
        clip_gradients(&mut small, 40.0);
        assert_eq!(small.get("w").unwrap().data(), &[6.0, 8.0]);

        let mut zero = grads_for(&s, &[0.0, 0.0]);
        clip_gradients(&mut zero, 40.0);
        assert_eq!(zero.get("w").unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn first_step_closed_form() {
        let mut s = store(vec![1.0, 1.0, 1.0]);
        let g = [0.5, -2.0, 1e-3];
        let mut adam = Adam::new(AdamConfig::default());
        let grads = grads_for(&s, &g);
        adam.step(&mut s, &grads, 0.01).unwrap();
        for (k, &gk) in g.iter().enumerate() {
            let expected = 1.0 - 0.01 * gk / (gk.abs() + 1e-8);
            assert!((s.get("w").unwrap().data()[k] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gradients_leave_params() {
        let mut s = store(vec![0.3, -0.2]);
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..5 {
            let g = Grads::zeros_like(&s);
            adam.step(&mut s, &g, 0.1).unwrap();
        }
        assert_eq!(s.get("w").unwrap().data(), &[0.3, -0.2]);
    }

    #[test]
    fn frozen_untouched() {
        let mut s = store(vec![0.3, -0.2]);
        s.set_frozen("w", true).unwrap();
        let mut adam = Adam::new(AdamConfig::default());
        let g = grads_for(&s, &[1.0, 1.0]);
        adam.step(&mut s, &g, 0.1).unwrap();
        assert_eq!(s.get("w").unwrap().data(), &[0.3, -0.2]);
        assert!(adam.state.is_empty());
    }
}
