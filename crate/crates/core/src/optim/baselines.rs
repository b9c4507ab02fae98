use serde::{Deserialize, Serialize};

use crate::numerics::l2_norm;
use crate::{Error, Result};

fn check(params: &[f64], grad: &[f64], op: &'static str) -> Result<()> {
    if params.len() != grad.len() {
        return Err(Error::shape(op, params.len(), grad.len()));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::non_finite(format!("{op} gradient")));
    }
    Ok(())
}

/// `w -= lr * g`
pub fn sgd_step(params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    check(params, grad, "sgd_step")?;
    for (w, g) in params.iter_mut().zip(grad) {
        *w -= lr * g;
    }
    Ok(())
}

/// `g` rescaled to l2 norm `threshold` if it is longer, unchanged otherwise.
pub fn clip_gradient(grad: &[f64], threshold: f64) -> Result<Vec<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "clip threshold must be positive, got {threshold}"
        )));
    }
    let n = l2_norm(grad);
    if !n.is_finite() {
        return Err(Error::non_finite("clipped gradient"));
    }
    if n > threshold {
        let scale = threshold / n;
        Ok(grad.iter().map(|g| g * scale).collect())
    } else {
        Ok(grad.to_vec())
    }
}

/// SGD on the clipped gradient.
pub fn clip_step(params: &mut [f64], grad: &[f64], lr: f64, threshold: f64) -> Result<()> {
    check(params, grad, "clip_step")?;
    sgd_step(params, &clip_gradient(grad, threshold)?, lr)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments:
///
/// ```text
/// m = b1 m + (1 - b1) g        v = b2 v + (1 - b2) g^2
/// w -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub hyper: AdamHyper,
    pub lr: f64,
}

impl AdamState {
    pub fn new(dim: usize, lr: f64, hyper: AdamHyper) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            hyper,
            lr,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        check(params, grad, "adam_step")?;
        if self.m.len() != params.len() {
            return Err(Error::shape("adam state", self.m.len(), params.len()));
        }
        let AdamHyper { beta1, beta2, eps } = self.hyper;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState) -> Result<()> {
    state.step(params, grad)
}
