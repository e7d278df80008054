//! AMSGrad without bias correction:
//!
//! ```text
//! m     ← β1·m + (1−β1)·g
//! v     ← β2·v + (1−β2)·g²
//! v̂     ← max(v̂, v)
//! θ     ← θ − lr·m / (√v̂ + ε)
//! ```

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub v_hat: Vec<f64>,
}

impl Moments {
    fn zeros(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            v_hat: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Amsgrad {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    /// One entry per parameter tensor, created on the first step.
    pub moments: Vec<Moments>,
}

impl Amsgrad {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: Vec::new(),
        }
    }

    /// Updates `params` in place. Nothing is modified when any gradient is
    /// non-finite or shapes disagree.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!("{} params, {} grads", params.len(), grads.len())));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::Shape(format!("param {k}: {:?} vs grad {:?}", p.shape(), g.shape())));
            }
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient of parameter {k}")));
            }
        }
        if self.moments.is_empty() {
            self.moments = params.iter().map(|p| Moments::zeros(p.len())).collect();
        } else if self.moments.len() != params.len() || self.moments.iter().zip(params.iter()).any(|(m, p)| m.m.len() != p.len()) {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }

        let (b1, b2) = (self.beta1, self.beta2);
        for ((p, g), st) in params.iter_mut().zip(grads).zip(&mut self.moments) {
            for (k, (theta, &gk)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                st.m[k] = flush(b1 * st.m[k] + (1.0 - b1) * gk);
                st.v[k] = flush(b2 * st.v[k] + (1.0 - b2) * gk * gk);
                st.v_hat[k] = st.v_hat[k].max(st.v[k]);
                *theta -= self.lr * st.m[k] / (st.v_hat[k].sqrt() + self.eps);
            }
        }
        self.step += 1;
        Ok(())
    }
}

// Moments of parameters whose gradient stays zero (inputs that are always
// zero) decay geometrically into subnormals, which are very slow on most
// CPUs. Below the smallest normal they contribute nothing to the update.
fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}
