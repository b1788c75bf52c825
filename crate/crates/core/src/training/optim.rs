//! Adam with optional decoupled weight decay, and cosine annealing.

use serde::{Deserialize, Serialize};

use crate::model::ParamStore;
use crate::numerics::Tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay; 0 gives plain Adam.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn adamw(weight_decay: f64) -> Self {
        Self {
            weight_decay,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros = || params.iter().map(|(_, t)| vec![0.0; t.len()]).collect::<Vec<_>>();
        Self {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update at learning rate `lr`. With weight decay,
/// `θ ← θ − lr·wd·θ` is applied first.
pub fn optimizer_step(
    params: &mut ParamStore,
    grads: &[Tensor<f32>],
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::shape(
            "optimizer_step",
            format!(
                "{} gradients, {} parameters, {} moment buffers",
                grads.len(),
                params.len(),
                state.m.len()
            ),
        ));
    }
    for ((p, g), m) in params.tensors_mut().zip(grads).zip(&state.m) {
        if p.shape() != g.shape() || m.len() != p.len() {
            return Err(Error::shape(
                "optimizer_step",
                format!("parameter {:?} vs gradient {:?}", p.shape(), g.shape()),
            ));
        }
    }
    let c = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    for (((p, g), m), v) in params
        .tensors_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for (k, (pk, &gk)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
            let gk = gk as f64;
            let mut theta = *pk as f64;
            if c.weight_decay != 0.0 {
                theta -= lr * c.weight_decay * theta;
            }
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            theta -= lr * m_hat / (v_hat.sqrt() + c.eps);
            *pk = theta as f32;
        }
    }
    if params.iter().any(|(_, t)| !t.is_finite()) {
        return Err(Error::NonFinite("optimizer_step"));
    }
    Ok(())
}

pub const DEFAULT_LR_MIN: f64 = 1e-6;

/// `lr_min + ½(lr_max − lr_min)(1 + cos(πt/T))`.
pub fn lr_schedule(t: usize, total: usize, lr_max: f64, lr_min: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument("schedule length must be positive".into()));
    }
    if t > total {
        return Err(Error::InvalidArgument(format!(
            "step {t} beyond schedule length {total}"
        )));
    }
    let phase = std::f64::consts::PI * t as f64 / total as f64;
    Ok(lr_min + 0.5 * (lr_max - lr_min) * (1.0 + phase.cos()))
}
