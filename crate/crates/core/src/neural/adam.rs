use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    t: i32,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }
}

/// `lr0 * decay^(epoch / interval)` with integer division.
pub fn scheduled_lr(lr0: f64, decay: f64, interval: usize, epoch: usize) -> f64 {
    if interval == 0 {
        return lr0;
    }
    lr0 * decay.powi((epoch / interval) as i32)
}

/// One bias-corrected Adam update in place.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState, lr: f64, p: &AdamParams) -> Result<()> {
    if !grads.same_shape(model) || !state.m.same_shape(model) {
        return Err(Error::ShapeMismatch("gradients or optimizer state do not match the model".into()));
    }
    state.t += 1;
    let c1 = 1.0 - p.beta1.powi(state.t);
    let c2 = 1.0 - p.beta2.powi(state.t);
    for (((layer, g), m), v) in model
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.m.layers)
        .zip(&mut state.v.layers)
    {
        let params = layer.w.iter_mut().chain(layer.b.iter_mut());
        let gs = g.w.iter().chain(&g.b);
        let ms = m.w.iter_mut().chain(m.b.iter_mut());
        let vs = v.w.iter_mut().chain(v.b.iter_mut());
        for (((x, g), m), v) in params.zip(gs).zip(ms).zip(vs) {
            *m = p.beta1 * *m + (1.0 - p.beta1) * g;
            *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
            *x -= lr * (*m / c1) / ((*v / c2).sqrt() + p.eps);
        }
    }
    Ok(())
}
