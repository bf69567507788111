use super::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
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

/// First and second moment estimates for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        let zeros = || params.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            config,
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every parameter.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(params.len(), grads.len(), "one gradient per parameter");
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.len(), g.len(), "gradient shape differs from parameter");
            for (((w, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // After bias correction the first step is lr · sign(g) (up to eps).
        let mut p = vec![Tensor::from_vec(&[2], vec![1.0, -1.0]).unwrap()];
        let g = vec![Tensor::from_vec(&[2], vec![2.0, -0.5]).unwrap()];
        let mut adam = AdamState::new(AdamConfig::default(), &p);
        adam.step(&mut p, &g);
        assert!((p[0].data()[0] - 0.999).abs() < 1e-9);
        assert!((p[0].data()[1] + 0.999).abs() < 1e-9);
    }

    #[test]
    fn minimizes_square() {
        let mut p = vec![Tensor::scalar(1.0)];
        let mut adam = AdamState::new(
            AdamConfig {
                lr: 0.01,
                ..Default::default()
            },
            &p,
        );
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            let w = p[0].item();
            let f = w * w;
            assert!(f <= last + 1e-12);
            last = f;
            adam.step(&mut p, &[Tensor::scalar(2.0 * w)]);
        }
        assert!(p[0].item().abs() < 0.5);
    }
}
