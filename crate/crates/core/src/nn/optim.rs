//! Trainable parameters, Adam and the max-norm constraint.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// A named trainable tensor with its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Parameter<F> {
    pub name: String,
    pub value: Tensor<F>,
    pub grad: Tensor<F>,
    /// Per-output-unit L2 bound on incoming weights, enforced after each step.
    pub max_norm_limit: Option<f64>,
}

impl<F: Scalar> Parameter<F> {
    pub fn new(name: impl Into<String>, value: Tensor<F>, max_norm_limit: Option<f64>) -> Self {
        let grad = Tensor::zeros(value.shape().to_vec());
        Self { name: name.into(), value, grad, max_norm_limit }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }

    pub fn cast<G: Scalar>(&self) -> Parameter<G> {
        Parameter {
            name: self.name.clone(),
            value: self.value.cast(),
            grad: self.grad.cast(),
            max_norm_limit: self.max_norm_limit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment estimates for every parameter plus the step count.
#[derive(Clone, Debug, Default)]
pub struct AdamState<F> {
    m: Vec<Tensor<F>>,
    v: Vec<Tensor<F>>,
    t: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new() -> Self {
        Self { m: Vec::new(), v: Vec::new(), t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update over `params`, followed by max-norm
/// projection of every constrained parameter.
pub fn adam_step<F: Scalar>(
    params: &mut [&mut Parameter<F>],
    state: &mut AdamState<F>,
    cfg: &AdamConfig,
) -> Result<()> {
    if !(cfg.lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate {} must be > 0", cfg.lr)));
    }
    if state.m.is_empty() {
        state.m = params.iter().map(|p| Tensor::zeros(p.value.shape().to_vec())).collect();
        state.v = state.m.clone();
    }
    if state.m.len() != params.len() {
        return Err(Error::shape("adam_step", format!("state tracks {} tensors, got {}", state.m.len(), params.len())));
    }
    state.t += 1;
    let t = state.t as i32;
    let b1 = F::lit(cfg.beta1);
    let b2 = F::lit(cfg.beta2);
    let one = F::one();
    let c1 = F::lit(1.0 / (1.0 - cfg.beta1.powi(t)));
    let c2 = F::lit(1.0 / (1.0 - cfg.beta2.powi(t)));
    let lr = F::lit(cfg.lr);
    let eps = F::lit(cfg.eps);

    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        if m.shape() != p.value.shape() {
            return Err(Error::shape("adam_step", format!("moment shape {:?} vs parameter {}", m.shape(), p.name)));
        }
        let g = p.grad.data();
        let w = p.value.data_mut();
        for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.data_mut()).zip(v.data_mut()) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let mhat = *m * c1;
            let vhat = *v * c2;
            *w -= lr * mhat / (vhat.sqrt() + eps);
        }
        if let Some(limit) = p.max_norm_limit {
            max_norm_project(&mut p.value, limit)?;
        }
    }
    Ok(())
}

fn row_norm<F: Scalar>(row: &[F]) -> f64 {
    row.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt()
}

/// Rescales each output unit's incoming-weight row (all axes after the first)
/// whose L2 norm exceeds `limit` so that its norm equals `limit`.
pub fn max_norm_project<F: Scalar>(w: &mut Tensor<F>, limit: f64) -> Result<()> {
    if !(limit > 0.0) {
        return Err(Error::InvalidArgument(format!("max-norm limit {limit} must be > 0")));
    }
    let units = w.dim(0);
    let width = w.len() / units;
    let shrink = F::one() - F::epsilon();
    for row in w.data_mut().chunks_exact_mut(width) {
        let norm = row_norm(row);
        if norm <= limit {
            continue;
        }
        let scale = F::lit(limit / norm);
        row.iter_mut().for_each(|v| *v *= scale);
        // Rounding may leave the row a hair above the limit; nudge it under so
        // a second projection is a no-op.
        while row_norm(row) > limit {
            row.iter_mut().for_each(|v| *v *= shrink);
        }
    }
    Ok(())
}
