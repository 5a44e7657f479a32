//! Epoch time as a function of convolution depth and per-sample inference
//! time of SCRNN against the LSTM baseline.

use amc_core::models::{build_lstm_baseline, build_scrnn, Network, ScrnnVariant};
use amc_core::synth::{build_dataset, GenConfig};
use amc_core::train::{benchmark_timing, median, prediction_timing, TrainConfig};
use amc_core::SeededRng;

fn main() -> amc_core::Result<()> {
    let ds = build_dataset(&GenConfig { per_cell: 5, seed: 5, ..GenConfig::default() })?;
    let cfg = TrainConfig { seed: 5, ..TrainConfig::default() };
    for depth in 1..=3 {
        let spec = build_scrnn(ScrnnVariant { conv_depth: depth, ..ScrnnVariant::default() })?;
        let t = benchmark_timing(&spec, &ds, &cfg, 5)?;
        println!(
            "conv depth {depth}: recurrent sequence length {:>3}, {:.2} s/epoch",
            spec.rnn_sequence_length()?.unwrap_or(0),
            t.train_seconds_per_epoch
        );
    }
    for spec in [build_scrnn(ScrnnVariant::default())?, build_lstm_baseline()] {
        let net = Network::<f32>::new(&spec, &mut SeededRng::new(5))?;
        println!("{:<14} inference {:.1} us/sample", spec.name, median(&prediction_timing(&net, &ds, 3)?));
    }
    Ok(())
}
