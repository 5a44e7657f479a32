//! Elementwise and row-wise activations.

use serde::{Deserialize, Serialize};

use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    Softmax,
}

/// Applies `kind`; softmax runs over the last axis.
pub fn activate<F: Scalar>(x: &Tensor<F>, kind: ActivationKind) -> Tensor<F> {
    match kind {
        ActivationKind::Relu => relu(x),
        ActivationKind::Softmax => softmax(x),
    }
}

pub fn relu<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(F::zero()));
    y
}

/// Gradient through relu, using the forward output to find the active units.
pub fn relu_backward<F: Scalar>(y: &Tensor<F>, dy: &Tensor<F>) -> Tensor<F> {
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
        if v <= F::zero() {
            *d = F::zero();
        }
    }
    dx
}

/// Max-subtracted softmax over the last axis.
pub fn softmax<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    let k = *x.shape().last().expect("softmax on rank-0 tensor");
    let mut y = x.clone();
    for row in y.data_mut().chunks_exact_mut(k) {
        let m = row.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
        let mut sum = F::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    y
}

/// Vector-Jacobian product of softmax: `dx = y ⊙ (dy − Σ dy⊙y)`.
pub fn softmax_backward<F: Scalar>(y: &Tensor<F>, dy: &Tensor<F>) -> Tensor<F> {
    let k = *y.shape().last().unwrap();
    let mut dx = dy.clone();
    for (drow, yrow) in dx.data_mut().chunks_exact_mut(k).zip(y.data().chunks_exact(k)) {
        let dot: F = drow.iter().zip(yrow).map(|(&d, &p)| d * p).sum();
        for (d, &p) in drow.iter_mut().zip(yrow) {
            *d = p * (*d - dot);
        }
    }
    dx
}

#[inline]
pub(crate) fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}
