//! A small ablation over kernel size and recurrent cell type on one shared
//! split, printed as CSV. At this size every run stays close to chance; the
//! grid mechanics are what is shown.

use amc_core::models::ScrnnVariant;
use amc_core::synth::{build_dataset, GenConfig, ModType};
use amc_core::train::{ablate, ablation_csv, AblationAxis, TrainConfig};

fn main() -> amc_core::Result<()> {
    let mods = vec![ModType::Bpsk, ModType::Qpsk, ModType::Qam16, ModType::Wbfm];
    let ds = build_dataset(&GenConfig { per_cell: 50, mods, snrs: vec![0, 18], seed: 13, ..GenConfig::default() })?;
    let cfg = TrainConfig { seed: 13, max_epochs: 8, batch_size: 32, ..TrainConfig::default() };
    let base = ScrnnVariant { kernel_count: 64, ..ScrnnVariant::default() };
    let runs = ablate(
        &[AblationAxis::KernelSize, AblationAxis::RnnType],
        base,
        &ds,
        0.8,
        &cfg,
        |run| eprintln!("{:<12} {:<28} accuracy {:.3}", run.axis.name(), run.label, run.report.evaluation.overall_accuracy),
        |_, _| {},
    )?;
    print!("{}", ablation_csv(&runs));
    Ok(())
}
