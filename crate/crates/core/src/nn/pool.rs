//! Max pooling along the time axis.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Forward result of a batched max-pool: pooled values plus, for each output
/// element, the time index that produced it.
#[derive(Clone, Debug)]
pub struct MaxPoolOutput<F> {
    pub output: Tensor<F>,
    pub argmax: Vec<usize>,
    pub input_steps: usize,
}

pub fn pooled_len(t: usize, size: usize, stride: usize) -> Option<usize> {
    (t >= size && size > 0 && stride > 0).then(|| (t - size) / stride + 1)
}

/// Single-sample pool over `x[C, T]`; argmax indices are positions along `T`.
pub fn maxpool1d<F: Scalar>(x: &Tensor<F>, size: usize, stride: usize) -> Result<(Tensor<F>, Vec<usize>)> {
    if x.rank() != 2 {
        return Err(Error::shape("maxpool1d", format!("input must be [C, T], got {:?}", x.shape())));
    }
    let (c, t) = (x.dim(0), x.dim(1));
    let xt = x.swap_last_two().reshape(vec![1, t, c])?;
    let out = maxpool1d_forward(&xt, size, stride)?;
    let tp = out.output.dim(1);
    let y = out.output.reshape(vec![tp, c])?.swap_last_two();
    // reorder argmax from [T', C] to [C, T']
    let mut arg = vec![0; c * tp];
    for p in 0..tp {
        for ch in 0..c {
            arg[ch * tp + p] = out.argmax[p * c + ch];
        }
    }
    Ok((y, arg))
}

/// Batched pool over `[N, T, C]`. Ties resolve to the lowest time index.
pub fn maxpool1d_forward<F: Scalar>(x: &Tensor<F>, size: usize, stride: usize) -> Result<MaxPoolOutput<F>> {
    if size == 0 || stride == 0 {
        return Err(Error::InvalidArgument(format!("maxpool1d size={size} stride={stride} must be >= 1")));
    }
    if x.rank() != 3 {
        return Err(Error::shape("maxpool1d", format!("input must be [N, T, C], got {:?}", x.shape())));
    }
    let (n, t, c) = (x.dim(0), x.dim(1), x.dim(2));
    let tp = pooled_len(t, size, stride).ok_or(Error::EmptyOutput { op: "maxpool1d", len: t, window: size })?;
    let xs = x.data();
    let mut out = vec![F::zero(); n * tp * c];
    let mut argmax = vec![0usize; n * tp * c];
    for s in 0..n {
        for p in 0..tp {
            let start = p * stride;
            let o = (s * tp + p) * c;
            let first = (s * t + start) * c;
            out[o..o + c].copy_from_slice(&xs[first..first + c]);
            argmax[o..o + c].iter_mut().for_each(|a| *a = start);
            for step in start + 1..start + size {
                let row = &xs[(s * t + step) * c..(s * t + step + 1) * c];
                for ch in 0..c {
                    if row[ch] > out[o + ch] {
                        out[o + ch] = row[ch];
                        argmax[o + ch] = step;
                    }
                }
            }
        }
    }
    Ok(MaxPoolOutput { output: Tensor::new(vec![n, tp, c], out)?, argmax, input_steps: t })
}

/// Routes `dy[N, T', C]` back to the argmax positions.
pub fn maxpool1d_backward<F: Scalar>(argmax: &[usize], input_steps: usize, dy: &Tensor<F>) -> Result<Tensor<F>> {
    if dy.rank() != 3 || dy.len() != argmax.len() {
        return Err(Error::shape("maxpool1d_backward", format!("dy shape {:?} does not match argmax", dy.shape())));
    }
    let (n, tp, c) = (dy.dim(0), dy.dim(1), dy.dim(2));
    let mut dx = vec![F::zero(); n * input_steps * c];
    let g = dy.data();
    for s in 0..n {
        for p in 0..tp {
            let o = (s * tp + p) * c;
            for ch in 0..c {
                dx[(s * input_steps + argmax[o + ch]) * c + ch] += g[o + ch];
            }
        }
    }
    Tensor::new(vec![n, input_steps, c], dx)
}
