//! Adam optimizer with decoupled weight decay.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::{AutodiffError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, weight_decay }
    }
}

/// First/second-moment accumulators for one list of parameter tensors.
///
/// The accumulator order must match the parameter order passed to
/// [`AdamState::step`] on every call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[&Tensor]) -> Self {
        Self {
            m: params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over all parameters.
    ///
    /// Weight decay is decoupled: each parameter first shrinks by
    /// `lr * weight_decay * p`, then the bias-corrected Adam delta is applied.
    /// Gradients of `None` are treated as zero (the moments still decay).
    pub fn step(
        &mut self,
        config: &AdamConfig,
        params: &mut [&mut Tensor],
        grads: &[Option<&Tensor>],
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(AutodiffError::InvalidOperand {
                op: "adam-step",
                detail: format!(
                    "{} accumulators with {} params / {} grads",
                    self.m.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - config.beta1.powf(t);
        let bc2 = 1.0 - config.beta2.powf(t);
        for i in 0..params.len() {
            let p = &mut *params[i];
            if let Some(g) = grads[i] {
                if g.shape() != p.shape() {
                    return Err(AutodiffError::ShapeMismatch {
                        op: "adam-step",
                        detail: format!("param {:?} vs grad {:?}", p.shape(), g.shape()),
                    });
                }
            }
            let m = self.m[i].values_mut();
            let v = self.v[i].values_mut();
            let pv = p.values_mut();
            if config.weight_decay != 0.0 {
                let shrink = config.lr * config.weight_decay;
                for x in pv.iter_mut() {
                    *x -= shrink * *x;
                }
            }
            for j in 0..pv.len() {
                let gj = grads[i].map_or(0.0, |g| g.values()[j]);
                m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
                v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                pv[j] -= config.lr * mhat / (vhat.sqrt() + config.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_leaves_params_unchanged() {
        let p0 = Tensor::vector(vec![1.5, -0.25]);
        let mut p = p0.clone();
        let mut state = AdamState::new(&[&p0]);
        let cfg = AdamConfig::new(1e-3, 0.0);
        let zero = Tensor::zeros(vec![2]);
        state.step(&cfg, &mut [&mut p], &[Some(&zero)]).unwrap();
        assert_eq!(p, p0);
    }

    #[test]
    fn first_step_matches_closed_form() {
        // With unit gradient and no decay the first update is
        // -lr * 1/(1+eps), independent of the betas.
        let mut p = Tensor::vector(vec![0.0]);
        let mut state = AdamState::new(&[&p.clone()]);
        let cfg = AdamConfig::new(1e-3, 0.0);
        let g = Tensor::vector(vec![1.0]);
        state.step(&cfg, &mut [&mut p], &[Some(&g)]).unwrap();
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p.values()[0] - expected).abs() < 1e-15);
        assert!((p.values()[0] + 9.99999e-4).abs() < 1e-9);
    }

    #[test]
    fn weight_decay_applies_before_adam_delta() {
        let mut p = Tensor::vector(vec![2.0]);
        let mut state = AdamState::new(&[&p.clone()]);
        let cfg = AdamConfig { lr: 0.1, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, weight_decay: 0.5 };
        let g = Tensor::vector(vec![1.0]);
        state.step(&cfg, &mut [&mut p], &[Some(&g)]).unwrap();
        // p shrinks to 2.0 - 0.1*0.5*2.0 = 1.9, then the Adam delta
        // -0.1/(1+1e-8) is applied.
        let expected = 1.9 - 0.1 / (1.0 + 1e-8);
        assert!((p.values()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn updates_are_bitwise_deterministic() {
        let run = || {
            let mut p = Tensor::vector(vec![0.3, -1.2, 4.5]);
            let mut state = AdamState::new(&[&p.clone()]);
            let cfg = AdamConfig::new(3e-4, 1e-5);
            for k in 0..25 {
                let g = Tensor::vector(vec![(k as f64).sin(), 0.5, -0.125 * k as f64]);
                state.step(&cfg, &mut [&mut p], &[Some(&g)]).unwrap();
            }
            p.values().to_vec()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn mismatched_lengths_error() {
        let p0 = Tensor::vector(vec![1.0]);
        let mut p = p0.clone();
        let mut state = AdamState::new(&[&p0]);
        let cfg = AdamConfig::new(1e-3, 0.0);
        assert!(state.step(&cfg, &mut [&mut p], &[]).is_err());
    }
}
