//! Adam optimizer with bias-corrected moments.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::layer::Param;
use crate::tensor::Tensor;

/// Default global-norm clip applied during long training runs. Off in
/// gradient-check contexts, where clipping would mask the analytic gradient.
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
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

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Per-parameter first/second moments plus the shared step counter. The
/// moment vectors are ordered exactly like the parameter list passed to
/// `new`, and `step` must receive the same list in the same order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Param]) -> Self {
        let m = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        let v = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        Self {
            config,
            t: 0,
            m,
            v,
        }
    }

    /// One Adam update over every parameter, consuming the accumulated
    /// gradients (the caller zeroes them afterwards).
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(NnError::Config(format!(
                "optimizer tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for p in params.iter() {
            if !p.grad.is_finite() {
                return Err(NnError::NonFiniteGrad(p.name.clone()));
            }
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (i, p) in params.iter_mut().enumerate() {
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for ((value, g), (mi, vi)) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(p.grad.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *value -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Scales every gradient so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm(params: &mut [&mut Param], max_norm: f64) -> f64 {
    let mut sq = 0.0;
    for p in params.iter() {
        for g in p.grad.data() {
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            for g in p.grad.data_mut() {
                *g *= scale;
            }
        }
    }
    norm
}
