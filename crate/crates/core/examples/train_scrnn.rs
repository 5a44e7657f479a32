//! Trains the default SCRNN on a four-class subset and writes a run report.
//!
//! `cargo run --release --example train_scrnn -- [out_dir]`

use amc_core::models::{build_scrnn, save_weights, ScrnnVariant};
use amc_core::synth::{build_dataset, GenConfig, ModType};
use amc_core::train::{export_report, run_experiment, TrainConfig};

fn main() -> amc_core::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("amc-train-scrnn"), Into::into);
    let mods = vec![ModType::Bpsk, ModType::Qpsk, ModType::Pam4, ModType::Cpfsk];
    let ds = build_dataset(&GenConfig { per_cell: 250, mods, snrs: vec![10, 18], seed: 21, ..GenConfig::default() })?;
    // The loss sits near chance for several epochs before it drops; patience
    // covers the whole run so early stopping does not end it on that plateau.
    let cfg = TrainConfig { seed: 21, max_epochs: 30, early_stop_patience: 30, ..TrainConfig::default() };
    let spec = build_scrnn(ScrnnVariant::default())?;
    println!("{} with {} parameters on {} frames", spec.name, spec.count_params()?, ds.len());

    let exp = run_experiment(&spec, &ds, 0.8, &cfg, serde_json::to_value(&cfg).unwrap(), |r| {
        println!("epoch {:>2}  train {:.4}  val {:.4}  {:.1}s", r.epoch, r.train_loss, r.val_loss, r.seconds);
    })?;
    let rep = &exp.report;
    println!("best epoch {} of {}, test accuracy {:.3}", rep.best_epoch, rep.history.len(), rep.evaluation.overall_accuracy);
    for (snr, acc) in &rep.evaluation.accuracy_by_snr {
        println!("  {snr:>3} dB  {acc:.3}");
    }

    std::fs::create_dir_all(&out).map_err(|e| amc_core::Error::io(&out, e))?;
    export_report(rep, &out)?;
    save_weights(&exp.network, out.join("weights.amcw"))?;
    println!("report and weights in {}", out.display());
    Ok(())
}
