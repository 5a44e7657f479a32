//! Mini-batch training with early stopping.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Network};
use crate::nn::{adam_step, cross_entropy_indices, AdamConfig, AdamState, Parameter};
use crate::parallel::{par_map, worker_count};
use crate::rng::SeededRng;
use crate::synth::{split_indices, Dataset};
use crate::tensor::{Scalar, Tensor};
use crate::train::config::{Precision, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: Network<f32>,
    pub history: Vec<EpochRecord>,
    /// Epoch (1-based) whose weights were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Indices into the training dataset used for fitting and validation.
    pub fit_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Mean cross-entropy over `indices` in inference mode. Batches are fixed by
/// `batch_size` and summed in order, so the value does not depend on the
/// worker count.
pub fn validation_loss<F: Scalar>(net: &Network<F>, ds: &Dataset, indices: &[usize], batch_size: usize) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let format = net.spec().input_format;
    let chunks: Vec<&[usize]> = indices.chunks(batch_size.max(1)).collect();
    let sums = par_map(chunks.len(), worker_count(), |c| -> Result<f64> {
        let x: Tensor<F> = ds.to_tensor(chunks[c], format)?;
        let probs = net.predict(&x)?;
        let (loss, _) = cross_entropy_indices(&probs, &ds.labels(chunks[c]))?;
        Ok(loss * chunks[c].len() as f64)
    });
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    Ok(total / indices.len() as f64)
}

/// Trains `spec` on `ds`, holding out a stratified validation share, and
/// returns the weights of the epoch with the lowest validation loss.
pub fn train(spec: &ModelSpec, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(spec, ds, cfg, |_| {})
}

pub fn train_with_progress(
    spec: &ModelSpec,
    ds: &Dataset,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    match cfg.precision {
        Precision::F32 => train_in::<f32>(spec, ds, cfg, on_epoch),
        Precision::F64 => train_in::<f64>(spec, ds, cfg, on_epoch),
    }
}

fn train_in<F: Scalar>(
    spec: &ModelSpec,
    ds: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    spec.validate()?;
    if ds.frame_len != spec.input_len {
        return Err(Error::shape("train", format!("dataset frames have {} samples, model expects {}", ds.frame_len, spec.input_len)));
    }
    let seed = cfg.seed;
    let (fit, val) = split_indices(ds, 1.0 - cfg.val_fraction, &mut SeededRng::derived(seed, &[1]))?;
    if fit.is_empty() || val.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "dataset of {} samples leaves {} for fitting and {} for validation",
            ds.len(),
            fit.len(),
            val.len()
        )));
    }
    let mut net = Network::<F>::new(spec, &mut SeededRng::derived(seed, &[2]))?;
    let mut shuffle_rng = SeededRng::derived(seed, &[3]);
    let mut dropout_rng = SeededRng::derived(seed, &[4]);
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
    let mut state = AdamState::new();
    let format = spec.input_format;

    let mut history = Vec::new();
    let mut best: Option<(usize, f64, Vec<Tensor<F>>)> = None;
    let mut order = fit.clone();
    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let x: Tensor<F> = ds.to_tensor(batch, format)?;
            let loss = net.accumulate_gradients(&x, &ds.labels(batch), Some(&mut dropout_rng)).map_err(|e| match e {
                Error::NonFinite { .. } | Error::NumericOverflow { .. } => Error::NonFiniteLoss { epoch, batch: b },
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            loss_sum += loss * batch.len() as f64;
            let mut params: Vec<&mut Parameter<F>> = net.params_mut().iter_mut().collect();
            adam_step(&mut params, &mut state, &adam)?;
        }
        let train_loss = loss_sum / order.len() as f64;
        let val_loss = validation_loss(&net, ds, &val, cfg.batch_size)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        let rec = EpochRecord { epoch, train_loss, val_loss, seconds: start.elapsed().as_secs_f64() };
        on_epoch(&rec);
        history.push(rec);
        if best.as_ref().is_none_or(|b| val_loss < b.1) {
            best = Some((epoch, val_loss, net.params().iter().map(|p| p.value.clone()).collect()));
        } else if epoch - best.as_ref().unwrap().0 >= cfg.early_stop_patience {
            break;
        }
    }
    let (best_epoch, best_val_loss, weights) = best.expect("at least one epoch ran");
    for (p, w) in net.params_mut().iter_mut().zip(weights) {
        p.value = w;
    }
    Ok(TrainOutcome { network: net.cast(), history, best_epoch, best_val_loss, fit_indices: fit, val_indices: val })
}
