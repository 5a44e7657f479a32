//! Same-padded 1-D convolution.
//!
//! Batched activations use the channels-last layout `[N, T, C]`; kernels are
//! stored `[C_out, C_in, K]`.

use crate::error::{Error, Result};
use crate::tensor::{gemm, Op, Scalar, Tensor};

/// Saved state from a forward pass, needed for the backward pass.
#[derive(Clone, Debug)]
pub struct Conv1dCache<F> {
    /// im2col matrix `[N*T, C_in*K]`.
    cols: Vec<F>,
    batch: usize,
    steps: usize,
    c_in: usize,
    kernel: usize,
}

/// Gradients of a convolution with respect to its input and parameters.
#[derive(Clone, Debug)]
pub struct Conv1dGrads<F> {
    pub input: Tensor<F>,
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

fn check_kernel<F: Scalar>(w: &Tensor<F>, b: &Tensor<F>, c_in: usize) -> Result<(usize, usize)> {
    if w.rank() != 3 {
        return Err(Error::shape("conv1d", format!("kernel must be [C_out, C_in, K], got {:?}", w.shape())));
    }
    let (c_out, wc_in, k) = (w.dim(0), w.dim(1), w.dim(2));
    if wc_in != c_in {
        return Err(Error::shape("conv1d", format!("C_in: input has {c_in} channels, kernel expects {wc_in}")));
    }
    if k % 2 == 0 {
        return Err(Error::shape("conv1d", format!("K: kernel width {k} must be odd for same padding")));
    }
    if b.rank() != 1 || b.dim(0) != c_out {
        return Err(Error::shape("conv1d", format!("C_out: bias shape {:?} does not match {c_out} filters", b.shape())));
    }
    Ok((c_out, k))
}

/// Single-sample convolution `x[C_in, T] -> y[C_out, T]`.
pub fn conv1d<F: Scalar>(x: &Tensor<F>, w: &Tensor<F>, b: &Tensor<F>) -> Result<Tensor<F>> {
    if x.rank() != 2 {
        return Err(Error::shape("conv1d", format!("input must be [C_in, T], got {:?}", x.shape())));
    }
    let (c_in, t) = (x.dim(0), x.dim(1));
    let xt = x.swap_last_two().reshape(vec![1, t, c_in])?;
    let (y, _) = conv1d_forward(&xt, w, b)?;
    let c_out = w.dim(0);
    Ok(y.reshape(vec![t, c_out])?.swap_last_two())
}

/// Batched convolution over `[N, T, C_in]`, returning `[N, T, C_out]`.
pub fn conv1d_forward<F: Scalar>(
    x: &Tensor<F>,
    w: &Tensor<F>,
    b: &Tensor<F>,
) -> Result<(Tensor<F>, Conv1dCache<F>)> {
    if x.rank() != 3 {
        return Err(Error::shape("conv1d", format!("input must be [N, T, C_in], got {:?}", x.shape())));
    }
    let (n, t, c_in) = (x.dim(0), x.dim(1), x.dim(2));
    let (c_out, k) = check_kernel(w, b, c_in)?;
    let pad = (k - 1) / 2;
    let ck = c_in * k;
    let rows = n * t;

    let xs = x.data();
    let mut cols = vec![F::zero(); rows * ck];
    for s in 0..n {
        let xb = &xs[s * t * c_in..(s + 1) * t * c_in];
        for step in 0..t {
            let row = &mut cols[(s * t + step) * ck..(s * t + step + 1) * ck];
            for tap in 0..k {
                let src = step + tap;
                if src < pad || src - pad >= t {
                    continue;
                }
                let xrow = &xb[(src - pad) * c_in..(src - pad + 1) * c_in];
                for (c, &v) in xrow.iter().enumerate() {
                    row[c * k + tap] = v;
                }
            }
        }
    }

    let mut y = vec![F::zero(); rows * c_out];
    gemm(Op::N, Op::T, rows, ck, c_out, &cols, w.data(), F::zero(), &mut y);
    let bias = b.data();
    for row in y.chunks_exact_mut(c_out) {
        for (v, &bb) in row.iter_mut().zip(bias) {
            *v += bb;
        }
    }
    let y = Tensor::new(vec![n, t, c_out], y)?;
    Ok((y, Conv1dCache { cols, batch: n, steps: t, c_in, kernel: k }))
}

/// Backward pass for [`conv1d_forward`] given `dy[N, T, C_out]`.
pub fn conv1d_backward<F: Scalar>(
    cache: &Conv1dCache<F>,
    w: &Tensor<F>,
    dy: &Tensor<F>,
) -> Result<Conv1dGrads<F>> {
    let (n, t, c_in, k) = (cache.batch, cache.steps, cache.c_in, cache.kernel);
    let c_out = w.dim(0);
    if dy.shape() != [n, t, c_out] {
        return Err(Error::shape("conv1d_backward", format!("dy shape {:?} != [{n}, {t}, {c_out}]", dy.shape())));
    }
    let ck = c_in * k;
    let rows = n * t;
    let pad = (k - 1) / 2;
    let g = dy.data();

    let mut dw = vec![F::zero(); c_out * ck];
    gemm(Op::T, Op::N, c_out, rows, ck, g, &cache.cols, F::zero(), &mut dw);

    let mut db = vec![F::zero(); c_out];
    for row in g.chunks_exact(c_out) {
        for (acc, &v) in db.iter_mut().zip(row) {
            *acc += v;
        }
    }

    let mut dcols = vec![F::zero(); rows * ck];
    gemm(Op::N, Op::N, rows, c_out, ck, g, w.data(), F::zero(), &mut dcols);

    let mut dx = vec![F::zero(); n * t * c_in];
    for s in 0..n {
        let dxb = &mut dx[s * t * c_in..(s + 1) * t * c_in];
        for step in 0..t {
            let row = &dcols[(s * t + step) * ck..(s * t + step + 1) * ck];
            for tap in 0..k {
                let src = step + tap;
                if src < pad || src - pad >= t {
                    continue;
                }
                let dst = &mut dxb[(src - pad) * c_in..(src - pad + 1) * c_in];
                for (c, d) in dst.iter_mut().enumerate() {
                    *d += row[c * k + tap];
                }
            }
        }
    }

    Ok(Conv1dGrads {
        input: Tensor::new(vec![n, t, c_in], dx)?,
        weight: Tensor::new(w.shape().to_vec(), dw)?,
        bias: Tensor::new(vec![c_out], db)?,
    })
}
