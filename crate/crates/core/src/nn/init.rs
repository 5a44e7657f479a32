//! Weight initializers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    GlorotUniform,
    Orthogonal,
    Zeros,
}

/// `(fan_in, fan_out)` for `[out, in]` matrices and `[out, in, k]` kernels.
fn fans(shape: &[usize]) -> Option<(usize, usize)> {
    match shape {
        [n] => Some((*n, *n)),
        [out, inp] => Some((*inp, *out)),
        [out, inp, k] => Some((inp * k, out * k)),
        _ => None,
    }
}

pub fn init_params<F: Scalar>(shape: &[usize], scheme: InitScheme, rng: &mut SeededRng) -> Result<Tensor<F>> {
    match scheme {
        InitScheme::Zeros => Tensor::new(shape.to_vec(), vec![F::zero(); shape.iter().product()]),
        InitScheme::GlorotUniform => {
            let (fan_in, fan_out) = fans(shape)
                .ok_or_else(|| Error::InvalidArgument(format!("glorot_uniform unsupported for shape {shape:?}")))?;
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let n = shape.iter().product();
            Tensor::new(shape.to_vec(), (0..n).map(|_| F::lit(rng.uniform_range(-bound, bound))).collect())
        }
        InitScheme::Orthogonal => {
            let (rows, cols) = match shape {
                [r, c] if r >= c => (*r, *c),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "orthogonal init needs a square-or-taller matrix, got {shape:?}"
                    )))
                }
            };
            let q = orthonormal_columns(rows, cols, rng);
            Tensor::new(shape.to_vec(), q.into_iter().map(F::lit).collect())
        }
    }
}

/// Gaussian matrix orthonormalized column-wise with two passes of modified
/// Gram-Schmidt. Row-major `[rows, cols]`.
fn orthonormal_columns(rows: usize, cols: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut a: Vec<f64> = (0..rows * cols).map(|_| rng.normal()).collect();
    for j in 0..cols {
        for _pass in 0..2 {
            for p in 0..j {
                let dot: f64 = (0..rows).map(|r| a[r * cols + j] * a[r * cols + p]).sum();
                for r in 0..rows {
                    a[r * cols + j] -= dot * a[r * cols + p];
                }
            }
        }
        let norm = (0..rows).map(|r| a[r * cols + j].powi(2)).sum::<f64>().sqrt();
        for r in 0..rows {
            a[r * cols + j] /= norm;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_scheme() {
        let t: Tensor<f32> = init_params(&[4, 3], InitScheme::Zeros, &mut SeededRng::new(0)).unwrap();
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn glorot_respects_bound() {
        let t: Tensor<f64> = init_params(&[100, 100], InitScheme::GlorotUniform, &mut SeededRng::new(1)).unwrap();
        assert!(t.max_abs() <= (6.0f64 / 200.0).sqrt());
        assert!(t.max_abs() > 0.9 * (6.0f64 / 200.0).sqrt());
    }

    #[test]
    fn orthogonal_is_orthonormal() {
        let t: Tensor<f32> = init_params(&[64, 64], InitScheme::Orthogonal, &mut SeededRng::new(2)).unwrap();
        let q = t.data();
        let mut worst = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                let dot: f64 = (0..64).map(|r| q[r * 64 + i] as f64 * q[r * 64 + j] as f64).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn orthogonal_rejects_wide_matrices() {
        assert!(init_params::<f32>(&[3, 8], InitScheme::Orthogonal, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let a: Tensor<f32> = init_params(&[8, 2, 5], InitScheme::GlorotUniform, &mut SeededRng::new(9)).unwrap();
        let b: Tensor<f32> = init_params(&[8, 2, 5], InitScheme::GlorotUniform, &mut SeededRng::new(9)).unwrap();
        assert_eq!(a, b);
    }
}
