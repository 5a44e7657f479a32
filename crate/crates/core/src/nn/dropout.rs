//! Inverted dropout.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

/// Per-element multiplier applied in the forward pass: `0` for dropped
/// entries and `1/(1-rate)` for kept ones. `None` means identity.
#[derive(Clone, Debug, Default)]
pub struct DropoutMask<F> {
    scale: Option<Vec<F>>,
}

impl<F: Scalar> DropoutMask<F> {
    pub fn is_identity(&self) -> bool {
        self.scale.is_none()
    }

    pub fn values(&self) -> Option<&[F]> {
        self.scale.as_deref()
    }

    pub fn backward(&self, dy: &Tensor<F>) -> Tensor<F> {
        let mut dx = dy.clone();
        if let Some(scale) = &self.scale {
            for (d, &s) in dx.data_mut().iter_mut().zip(scale) {
                *d *= s;
            }
        }
        dx
    }
}

pub fn dropout<F: Scalar>(
    x: &Tensor<F>,
    rate: f64,
    rng: &mut SeededRng,
    training: bool,
) -> Result<(Tensor<F>, DropoutMask<F>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), DropoutMask { scale: None }));
    }
    let keep = F::lit(1.0 / (1.0 - rate));
    let scale: Vec<F> = (0..x.len()).map(|_| if rng.uniform() < rate { F::zero() } else { keep }).collect();
    let mut y = x.clone();
    for (v, &s) in y.data_mut().iter_mut().zip(&scale) {
        *v *= s;
    }
    Ok((y, DropoutMask { scale: Some(scale) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::<f32>::from_f64(vec![3], &[1.5, -2.0, 0.25]).unwrap();
        let (y, mask) = dropout(&x, 0.0, &mut SeededRng::new(1), true).unwrap();
        assert_eq!(y, x);
        assert!(mask.is_identity());
    }

    #[test]
    fn inference_mode_is_bit_exact_identity() {
        let x = Tensor::<f32>::from_f64(vec![4], &[1.1, -2.3, 0.7, 1e-30]).unwrap();
        let (y, _) = dropout(&x, 0.5, &mut SeededRng::new(1), false).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn expectation_is_preserved() {
        let n = 100_000;
        let x = Tensor::<f64>::full(vec![n], 1.7);
        let (y, _) = dropout(&x, 0.5, &mut SeededRng::new(99), true).unwrap();
        let mean = y.data().iter().sum::<f64>() / n as f64;
        assert!((mean - 1.7).abs() / 1.7 < 0.02, "mean {mean}");
    }

    #[test]
    fn rejects_bad_rate() {
        let x = Tensor::<f32>::zeros(vec![2]);
        assert!(dropout(&x, 1.0, &mut SeededRng::new(0), true).is_err());
        assert!(dropout(&x, -0.1, &mut SeededRng::new(0), true).is_err());
    }

    #[test]
    fn backward_reuses_mask() {
        let x = Tensor::<f64>::full(vec![64], 1.0);
        let (y, mask) = dropout(&x, 0.5, &mut SeededRng::new(4), true).unwrap();
        let dx = mask.backward(&Tensor::full(vec![64], 1.0));
        assert_eq!(dx.data(), y.data());
    }
}
