//! Categorical cross-entropy fused with softmax.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub const PROB_CLAMP: f64 = 1e-7;

/// Mean cross-entropy of softmax outputs against one-hot labels, plus the
/// gradient with respect to the pre-softmax logits, `(probs − labels)/N`.
pub fn cross_entropy<F: Scalar>(probs: &Tensor<F>, labels: &Tensor<F>) -> Result<(f64, Tensor<F>)> {
    if probs.rank() != 2 || probs.shape() != labels.shape() {
        return Err(Error::shape(
            "cross_entropy",
            format!("probs {:?} and labels {:?} must both be [N, K]", probs.shape(), labels.shape()),
        ));
    }
    let k = probs.dim(1);
    let mut classes = Vec::with_capacity(probs.dim(0));
    for (row, l) in labels.data().chunks_exact(k).enumerate() {
        let ones = l.iter().filter(|&&v| v == F::one()).count();
        let zeros = l.iter().filter(|&&v| v == F::zero()).count();
        if ones != 1 || zeros != k - 1 {
            return Err(Error::NotOneHot { row });
        }
        classes.push(l.iter().position(|&v| v == F::one()).unwrap());
    }
    cross_entropy_indices(probs, &classes)
}

/// Same as [`cross_entropy`] with labels given as class indices.
pub fn cross_entropy_indices<F: Scalar>(probs: &Tensor<F>, classes: &[usize]) -> Result<(f64, Tensor<F>)> {
    if probs.rank() != 2 || probs.dim(0) != classes.len() {
        return Err(Error::shape(
            "cross_entropy",
            format!("probs {:?} vs {} labels", probs.shape(), classes.len()),
        ));
    }
    let (n, k) = (probs.dim(0), probs.dim(1));
    let inv_n = F::lit(1.0 / n as f64);
    let mut loss = 0.0f64;
    let mut grad = probs.clone();
    for (row, (g, &c)) in grad.data_mut().chunks_exact_mut(k).zip(classes).enumerate() {
        if c >= k {
            return Err(Error::NotOneHot { row });
        }
        let p = g[c].as_f64().clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= p.ln();
        g[c] -= F::one();
        for v in g.iter_mut() {
            *v *= inv_n;
        }
    }
    Ok((loss / n as f64, grad))
}
