//! Central-difference gradient verification.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// A scalar loss over a set of 64-bit parameter tensors that can also report
/// its analytic gradient.
pub trait GradObjective {
    fn num_tensors(&self) -> usize;
    fn tensor_len(&self, tensor: usize) -> usize;
    fn get(&self, tensor: usize, index: usize) -> f64;
    fn set(&mut self, tensor: usize, index: usize, value: f64);
    fn loss(&mut self) -> Result<f64>;
    /// Analytic gradient, one flat vector per tensor.
    fn gradient(&mut self) -> Result<Vec<Vec<f64>>>;
    /// Fingerprint of the piecewise-linear regime (ReLU signs, pooling
    /// winners) seen by the most recent evaluation. Objectives with kinks
    /// report one so that coordinates whose `±ε` window straddles a kink
    /// are not mistaken for gradient errors.
    fn kink_signature(&self) -> Option<u64> {
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    /// Coordinates sampled per tensor; tensors at most this large are checked in full.
    pub samples_per_tensor: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { epsilon: 1e-5, samples_per_tensor: 200, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(tensor, index, analytic, numeric)` at the worst coordinate.
    pub worst: Option<(usize, usize, f64, f64)>,
    pub coordinates_checked: usize,
    /// Sampled coordinates dropped because the perturbation crossed a kink.
    pub kinks_skipped: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the analytic gradient to central differences and returns the
/// maximum relative error over the sampled coordinates.
pub fn grad_check<O: GradObjective + ?Sized>(obj: &mut O, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let analytic = obj.gradient()?;
    let mut rng = SeededRng::new(cfg.seed);
    let mut report = GradCheckReport::default();
    let base = obj.kink_signature();
    for tensor in 0..obj.num_tensors() {
        let len = obj.tensor_len(tensor);
        let mut coords: Vec<usize> = (0..len).collect();
        if len > cfg.samples_per_tensor {
            rng.shuffle(&mut coords);
        }
        let mut accepted = 0;
        for idx in coords {
            if accepted == cfg.samples_per_tensor {
                break;
            }
            let orig = obj.get(tensor, idx);
            obj.set(tensor, idx, orig + cfg.epsilon);
            let plus = obj.loss()?;
            let sig_plus = obj.kink_signature();
            obj.set(tensor, idx, orig - cfg.epsilon);
            let minus = obj.loss()?;
            let sig_minus = obj.kink_signature();
            obj.set(tensor, idx, orig);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite { stage: format!("grad_check perturbation of tensor {tensor}[{idx}]") });
            }
            if sig_plus != base || sig_minus != base {
                report.kinks_skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * cfg.epsilon);
            let a = analytic[tensor][idx];
            let err = relative_error(a, numeric);
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err.max(report.max_rel_error);
                report.worst = Some((tensor, idx, a, numeric));
            }
            report.coordinates_checked += 1;
            accepted += 1;
        }
    }
    Ok(report)
}

/// Adapts a closure `params -> (loss, grads)` into a [`GradObjective`].
pub struct FnObjective<L> {
    pub params: Vec<Tensor<f64>>,
    eval: L,
}

impl<L> FnObjective<L>
where
    L: FnMut(&[Tensor<f64>]) -> Result<(f64, Vec<Tensor<f64>>)>,
{
    pub fn new(params: Vec<Tensor<f64>>, eval: L) -> Self {
        Self { params, eval }
    }
}

impl<L> GradObjective for FnObjective<L>
where
    L: FnMut(&[Tensor<f64>]) -> Result<(f64, Vec<Tensor<f64>>)>,
{
    fn num_tensors(&self) -> usize {
        self.params.len()
    }

    fn tensor_len(&self, tensor: usize) -> usize {
        self.params[tensor].len()
    }

    fn get(&self, tensor: usize, index: usize) -> f64 {
        self.params[tensor].data()[index]
    }

    fn set(&mut self, tensor: usize, index: usize, value: f64) {
        self.params[tensor].data_mut()[index] = value;
    }

    fn loss(&mut self) -> Result<f64> {
        Ok((self.eval)(&self.params)?.0)
    }

    fn gradient(&mut self) -> Result<Vec<Vec<f64>>> {
        Ok((self.eval)(&self.params)?.1.into_iter().map(Tensor::into_data).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::{relu, relu_backward, softmax};
    use crate::nn::conv::{conv1d_backward, conv1d_forward};
    use crate::nn::dense::{dense, dense_backward};
    use crate::nn::dropout::dropout;
    use crate::nn::loss::cross_entropy_indices;
    use crate::nn::pool::{maxpool1d_backward, maxpool1d_forward};
    use crate::nn::rnn::{rnn_sequence, rnn_sequence_backward, RnnCellParams, RnnKind, StateActivation};

    fn randn(shape: &[usize], scale: f64, rng: &mut SeededRng) -> Tensor<f64> {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| scale * rng.normal()).collect()).unwrap()
    }

    #[test]
    fn linear_model_is_exact() {
        let mut rng = SeededRng::new(1);
        let x = randn(&[5, 4], 1.0, &mut rng);
        let c = randn(&[5, 3], 1.0, &mut rng);
        let params = vec![randn(&[3, 4], 1.0, &mut rng), randn(&[3], 1.0, &mut rng)];
        // loss = Σ c ⊙ (x Wᵀ + b), linear in the parameters
        let mut obj = FnObjective::new(params, |p: &[Tensor<f64>]| {
            let y = dense(&x, &p[0], &p[1])?;
            let loss = y.data().iter().zip(c.data()).map(|(a, b)| a * b).sum();
            let g = dense_backward(&x, &p[0], &c)?;
            Ok((loss, vec![g.weight, g.bias]))
        });
        let report = grad_check(&mut obj, &GradCheckConfig::default()).unwrap();
        assert!(report.max_rel_error < 1e-9, "{report:?}");
    }

    #[test]
    fn conv_relu_dense_softmax_stack() {
        let mut rng = SeededRng::new(2);
        let (n, t, c_in, c_out, k, classes) = (3, 10, 2, 4, 5, 11);
        let x = randn(&[n, t, c_in], 1.0, &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(classes)).collect();
        let params = vec![
            randn(&[c_out, c_in, k], 0.4, &mut rng),
            randn(&[c_out], 0.1, &mut rng),
            randn(&[classes, t * c_out], 0.3, &mut rng),
            randn(&[classes], 0.1, &mut rng),
        ];
        let mut obj = FnObjective::new(params, |p: &[Tensor<f64>]| {
            let (h, cache) = conv1d_forward(&x, &p[0], &p[1])?;
            let a = relu(&h);
            let flat = a.clone().reshape(vec![n, t * c_out])?;
            let logits = dense(&flat, &p[2], &p[3])?;
            let (loss, dlogits) = cross_entropy_indices(&softmax(&logits), &labels)?;
            let dg = dense_backward(&flat, &p[2], &dlogits)?;
            let da = relu_backward(&a, &dg.input.reshape(vec![n, t, c_out])?);
            let cg = conv1d_backward(&cache, &p[0], &da)?;
            Ok((loss, vec![cg.weight, cg.bias, dg.weight, dg.bias]))
        });
        let report = grad_check(&mut obj, &GradCheckConfig::default()).unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn maxpool_and_dropout_stack() {
        let mut rng = SeededRng::new(3);
        let (n, t, c, classes) = (2, 9, 3, 5);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(classes)).collect();
        let tp = 3;
        let params = vec![
            randn(&[n, t, c], 1.0, &mut rng),
            randn(&[classes, tp * c], 0.5, &mut rng),
            randn(&[classes], 0.1, &mut rng),
        ];
        let mut obj = FnObjective::new(params, |p: &[Tensor<f64>]| {
            let pooled = maxpool1d_forward(&p[0], 3, 3)?;
            let (d, mask) = dropout(&pooled.output, 0.5, &mut SeededRng::new(77), true)?;
            let flat = d.clone().reshape(vec![n, tp * c])?;
            let logits = dense(&flat, &p[1], &p[2])?;
            let (loss, dl) = cross_entropy_indices(&softmax(&logits), &labels)?;
            let dg = dense_backward(&flat, &p[1], &dl)?;
            let dd = mask.backward(&dg.input.reshape(vec![n, tp, c])?);
            let dx = maxpool1d_backward(&pooled.argmax, t, &dd)?;
            Ok((loss, vec![dx, dg.weight, dg.bias]))
        });
        let report = grad_check(&mut obj, &GradCheckConfig::default()).unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    // At epsilon 1e-5 the central difference carries ~1e-11 of f64 roundoff,
    // so coordinates with true gradients below ~1e-7 cannot meet 1e-4.
    fn check_rnn(kind: RnnKind, act: StateActivation, return_sequences: bool) -> GradCheckReport {
        let mut rng = SeededRng::new(100 + 10 * kind.gates() as u64 + act as u64 + 5 * return_sequences as u64);
        let (n, t, f, h) = (2, 7, 3, 4);
        let x = randn(&[n, t, f], 1.0, &mut rng);
        let proj_shape: Vec<usize> = if return_sequences { vec![n, t, h] } else { vec![n, h] };
        let proj = randn(&proj_shape, 1.0, &mut rng);
        let init = RnnCellParams::<f64>::init(kind, f, h, act, &mut rng).unwrap();
        let params = vec![
            init.input_weights.clone(),
            init.recurrent_weights.clone(),
            randn(&[kind.gates() * h], 0.3, &mut rng),
            x.clone(),
        ];
        let mut obj = FnObjective::new(params, |p: &[Tensor<f64>]| {
            let cell = RnnCellParams {
                kind,
                input_weights: p[0].clone(),
                recurrent_weights: p[1].clone(),
                biases: p[2].clone(),
                hidden_size: h,
                state_activation: act,
            };
            let (y, cache) = rnn_sequence(&cell, &p[3], return_sequences)?;
            let loss = y.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum();
            let g = rnn_sequence_backward(&cell, &cache, &proj)?;
            Ok((loss, vec![g.input_weights, g.recurrent_weights, g.biases, g.input]))
        });
        grad_check(&mut obj, &GradCheckConfig::default()).unwrap()
    }

    #[test]
    fn bptt_matches_finite_differences_for_every_cell() {
        for kind in [RnnKind::Lstm, RnnKind::Gru, RnnKind::Simple] {
            for act in [StateActivation::Tanh, StateActivation::Relu] {
                for seq in [true, false] {
                    let r = check_rnn(kind, act, seq);
                    assert!(r.max_rel_error < 1e-4, "{kind:?} {act:?} seq={seq}: {r:?}");
                }
            }
        }
    }
}
