//! Wall-clock measurements of training epochs and inference.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Network};
use crate::nn::{adam_step, AdamConfig, AdamState, Parameter};
use crate::rng::SeededRng;
use crate::synth::Dataset;
use crate::tensor::Tensor;
use crate::train::config::TrainConfig;
use crate::train::eval::EVAL_BATCH;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Median training epoch time in seconds.
    pub train_seconds_per_epoch: f64,
    pub total_train_seconds: f64,
    /// Median inference time per sample at batch 128, in microseconds.
    pub prediction_us_per_sample: f64,
    pub epoch_seconds: Vec<f64>,
    pub prediction_repeats_us: Vec<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Per-sample inference time over all of `ds` in batches of 128, one
/// value per repeat, after an untimed warm-up pass.
pub fn prediction_timing(net: &Network<f32>, ds: &Dataset, repeats: usize) -> Result<Vec<f64>> {
    if ds.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let idx: Vec<usize> = (0..ds.len()).collect();
    let format = net.spec().input_format;
    let batches: Vec<Tensor<f32>> = idx.chunks(EVAL_BATCH).map(|c| ds.to_tensor(c, format)).collect::<Result<_>>()?;
    let pass = || -> Result<f64> {
        let start = Instant::now();
        for b in &batches {
            std::hint::black_box(net.predict(b)?);
        }
        Ok(start.elapsed().as_secs_f64() * 1e6 / ds.len() as f64)
    };
    pass()?;
    (0..repeats.max(1)).map(|_| pass()).collect()
}

/// Trains a fresh network on all of `ds` for one warm-up epoch plus
/// `epochs` timed epochs, then times inference.
pub fn benchmark_timing(spec: &ModelSpec, ds: &Dataset, cfg: &TrainConfig, epochs: usize) -> Result<Timing> {
    cfg.validate()?;
    if epochs < 5 {
        return Err(Error::InvalidArgument(format!("timing needs at least 5 epochs, got {epochs}")));
    }
    if ds.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut net = Network::<f32>::new(spec, &mut SeededRng::derived(cfg.seed, &[2]))?;
    let mut shuffle = SeededRng::derived(cfg.seed, &[3]);
    let mut drop_rng = SeededRng::derived(cfg.seed, &[4]);
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
    let mut state = AdamState::new();
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut epoch_seconds = Vec::with_capacity(epochs);
    for e in 0..=epochs {
        let start = Instant::now();
        shuffle.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let x: Tensor<f32> = ds.to_tensor(batch, spec.input_format)?;
            net.accumulate_gradients(&x, &ds.labels(batch), Some(&mut drop_rng))?;
            let mut params: Vec<&mut Parameter<f32>> = net.params_mut().iter_mut().collect();
            adam_step(&mut params, &mut state, &adam)?;
        }
        if e > 0 {
            epoch_seconds.push(start.elapsed().as_secs_f64());
        }
    }
    let prediction_repeats_us = prediction_timing(&net, ds, 5)?;
    Ok(Timing {
        train_seconds_per_epoch: median(&epoch_seconds),
        total_train_seconds: epoch_seconds.iter().sum(),
        prediction_us_per_sample: median(&prediction_repeats_us),
        epoch_seconds,
        prediction_repeats_us,
    })
}
