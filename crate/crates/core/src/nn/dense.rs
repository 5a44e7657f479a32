//! Fully connected layer: `y = W·x + b`.

use crate::error::{Error, Result};
use crate::tensor::{gemm, Op, Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct DenseGrads<F> {
    pub input: Tensor<F>,
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

fn dims<F: Scalar>(x: &Tensor<F>, w: &Tensor<F>, b: &Tensor<F>) -> Result<(usize, usize, usize)> {
    if w.rank() != 2 {
        return Err(Error::shape("dense", format!("weight must be [U, F], got {:?}", w.shape())));
    }
    let (u, f) = (w.dim(0), w.dim(1));
    let n = match x.rank() {
        1 => 1,
        2 => x.dim(0),
        _ => return Err(Error::shape("dense", format!("input must be [F] or [N, F], got {:?}", x.shape()))),
    };
    let xf = *x.shape().last().unwrap();
    if xf != f {
        return Err(Error::shape("dense", format!("F: input has {xf} features, weight expects {f}")));
    }
    if b.shape() != [u] {
        return Err(Error::shape("dense", format!("U: bias shape {:?} does not match {u} units", b.shape())));
    }
    Ok((n, f, u))
}

/// Accepts `x[F]` (returns `[U]`) or a batch `x[N, F]` (returns `[N, U]`).
pub fn dense<F: Scalar>(x: &Tensor<F>, w: &Tensor<F>, b: &Tensor<F>) -> Result<Tensor<F>> {
    let (n, f, u) = dims(x, w, b)?;
    let mut y = vec![F::zero(); n * u];
    gemm(Op::N, Op::T, n, f, u, x.data(), w.data(), F::zero(), &mut y);
    for row in y.chunks_exact_mut(u) {
        for (v, &bb) in row.iter_mut().zip(b.data()) {
            *v += bb;
        }
    }
    let shape = if x.rank() == 1 { vec![u] } else { vec![n, u] };
    Tensor::new(shape, y)
}

/// `dL/dx = Wᵀ·dy`, `dL/dW = dy ⊗ x` (summed over the batch), `dL/db = Σ dy`.
pub fn dense_backward<F: Scalar>(x: &Tensor<F>, w: &Tensor<F>, dy: &Tensor<F>) -> Result<DenseGrads<F>> {
    let (u, f) = (w.dim(0), w.dim(1));
    let n = x.len() / f;
    if dy.len() != n * u {
        return Err(Error::shape("dense_backward", format!("dy shape {:?} does not match [{n}, {u}]", dy.shape())));
    }
    let mut dw = vec![F::zero(); u * f];
    gemm(Op::T, Op::N, u, n, f, dy.data(), x.data(), F::zero(), &mut dw);
    let mut db = vec![F::zero(); u];
    for row in dy.data().chunks_exact(u) {
        for (acc, &v) in db.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let mut dx = vec![F::zero(); n * f];
    gemm(Op::N, Op::N, n, u, f, dy.data(), w.data(), F::zero(), &mut dx);
    Ok(DenseGrads {
        input: Tensor::new(x.shape().to_vec(), dx)?,
        weight: Tensor::new(vec![u, f], dw)?,
        bias: Tensor::new(vec![u], db)?,
    })
}
