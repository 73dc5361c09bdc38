//! Adaptive-moment gradient steps over the flattened parameter vector.

use super::net::{PolicyError, PolicyParams};

#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(param_len: usize) -> Self {
        Self { m: vec![0.0; param_len], v: vec![0.0; param_len], t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// One descent step: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    ///
    /// Deterministic given the optimizer state; zero gradients leave the
    /// parameters unchanged because the bias-corrected moments stay zero.
    pub fn step(
        &mut self,
        params: &mut PolicyParams,
        grads: &PolicyParams,
        lr: f64,
    ) -> Result<(), PolicyError> {
        let mut flat = params.flatten();
        let gflat = grads.flatten();
        if gflat.len() != flat.len() || flat.len() != self.m.len() {
            return Err(PolicyError::ShapeMismatch { expected: self.m.len(), got: gflat.len() });
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..flat.len() {
            let g = gflat[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            flat[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        params.assign_flat(&flat)
    }
}
