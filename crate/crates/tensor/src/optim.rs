//! AdamW with decoupled weight decay.

use std::collections::BTreeMap;

use crate::{Result, Tensor, TensorError};

/// Optimizer hyperparameters. Constant learning rate by design.
#[derive(Debug, Clone, Copy)]
pub struct AdamWParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWParams {
    fn default() -> Self {
        AdamWParams {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Tensor<f32>,
    v: Tensor<f32>,
}

/// Per-parameter first/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct OptState {
    pub hyper: AdamWParams,
    step: u64,
    moments: BTreeMap<String, Moments>,
}

impl OptState {
    pub fn new(hyper: AdamWParams) -> Self {
        OptState {
            hyper,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One decoupled-weight-decay adaptive-moment update over named parameters.
///
/// `params` and `grads` pair by name; every gradient must shape-match its
/// parameter. Missing accumulators are lazily created as zeros.
pub fn adamw_step(
    params: &mut [(String, Tensor<f32>)],
    grads: &[(&str, &Tensor<f32>)],
    state: &mut OptState,
) -> Result<()> {
    state.step += 1;
    let t = state.step as i32;
    let h = state.hyper;
    let bias1 = 1.0 - h.beta1.powi(t);
    let bias2 = 1.0 - h.beta2.powi(t);

    for (name, param) in params.iter_mut() {
        let Some((_, grad)) = grads.iter().find(|(n, _)| n == name) else {
            continue;
        };
        if grad.shape() != param.shape() {
            return Err(TensorError::ShapeMismatch {
                context: "adamw_step",
                left: param.shape().to_vec(),
                right: grad.shape().to_vec(),
            });
        }
        let slot = state.moments.entry(name.clone()).or_insert_with(|| Moments {
            m: Tensor::zeros(param.shape()),
            v: Tensor::zeros(param.shape()),
        });
        if slot.m.shape() != param.shape() {
            return Err(TensorError::ShapeMismatch {
                context: "adamw_step accumulator",
                left: param.shape().to_vec(),
                right: slot.m.shape().to_vec(),
            });
        }
        let (b1, b2) = (h.beta1 as f32, h.beta2 as f32);
        for i in 0..param.numel() {
            let g = grad.data()[i];
            let m = b1 * slot.m.data()[i] + (1.0 - b1) * g;
            let v = b2 * slot.v.data()[i] + (1.0 - b2) * g * g;
            slot.m.data_mut()[i] = m;
            slot.v.data_mut()[i] = v;
            let m_hat = m as f64 / bias1;
            let v_hat = v as f64 / bias2;
            let p = param.data()[i] as f64;
            let update = h.lr * (m_hat / (v_hat.sqrt() + h.eps) + h.weight_decay * p);
            param.data_mut()[i] = (p - update) as f32;
        }
    }
    Ok(())
}
