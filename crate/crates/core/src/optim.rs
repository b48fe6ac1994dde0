//! Adam with bias correction.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub iter: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            iter: 0,
        }
    }
}

/// One Adam update of `params` in place using learning rate `lr`
/// (which overrides `cfg.lr`, so schedules can vary it per step).
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState, cfg: &AdamConfig, lr: f64) {
    assert_eq!(params.len(), grad.len());
    assert_eq!(params.len(), state.m.len());
    state.iter += 1;
    let t = state.iter as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.5, -1.0, 2.0];
        let mut st = AdamState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut st, &cfg, cfg.lr);
        assert_eq!(p, vec![0.5, -1.0, 2.0]);
        assert_eq!(st.m, vec![0.0; 3]);
        assert_eq!(st.v, vec![0.0; 3]);
        assert_eq!(st.iter, 1);
    }

    #[test]
    fn first_step_is_lr_times_normalized_gradient() {
        let cfg = AdamConfig::default();
        let g = [0.3, -4.0, 1e-9];
        let mut p = vec![0.0; 3];
        let mut st = AdamState::new(3);
        adam_step(&mut p, &g, &mut st, &cfg, 0.01);
        for (pi, gi) in p.iter().zip(g) {
            // m̂ = g, v̂ = g² after bias correction
            let expected = -0.01 * gi / (gi.abs() + cfg.eps);
            assert!((pi - expected).abs() <= 1e-15 * expected.abs().max(1e-300), "{pi} {expected}");
        }
    }

    #[test]
    fn identical_inputs_give_identical_trajectories() {
        let cfg = AdamConfig::default();
        let run = || {
            let mut p = vec![1.0, 2.0];
            let mut st = AdamState::new(2);
            for k in 0..50 {
                let g = [p[0] * 0.1 + k as f64 * 1e-3, p[1].sin()];
                adam_step(&mut p, &g, &mut st, &cfg, cfg.lr);
            }
            p
        };
        assert_eq!(run(), run());
    }
}
