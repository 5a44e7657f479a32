//! Per-SNR accuracy and confusion matrices for a briefly trained SCRNN on
//! all eleven classes.

use amc_core::models::{build_scrnn, ScrnnVariant};
use amc_core::synth::{build_dataset, GenConfig, ModType};
use amc_core::train::{evaluate, smooth3, train, train_test_split, TrainConfig};

fn main() -> amc_core::Result<()> {
    let snrs = vec![-20, -10, 0, 10, 18];
    let ds = build_dataset(&GenConfig { per_cell: 40, snrs, seed: 8, ..GenConfig::default() })?;
    let (tr, te) = train_test_split(&ds, 0.8, 8)?;
    let cfg = TrainConfig { seed: 8, max_epochs: 8, ..TrainConfig::default() };
    let spec = build_scrnn(ScrnnVariant { kernel_count: 64, ..ScrnnVariant::default() })?;
    let out = train(&spec, &ds.subset(&tr), &cfg)?;
    let eval = evaluate(&out.network, &ds.subset(&te))?;

    let accs: Vec<f64> = eval.accuracy_by_snr.values().copied().collect();
    for ((snr, acc), s) in eval.accuracy_by_snr.iter().zip(smooth3(&accs)) {
        println!("{snr:>4} dB  accuracy {acc:.3}  smoothed {s:.3}  ({} samples)", eval.samples_by_snr[snr]);
    }

    let m = &eval.confusion_by_snr[&18];
    print!("\nconfusion at 18 dB (rows true, columns predicted)\n{:>8}", "");
    for c in ModType::ALL {
        print!("{:>7}", c.name());
    }
    println!();
    for (t, row) in m.counts.iter().enumerate() {
        print!("{:>8}", ModType::ALL[t].name());
        for v in row {
            print!("{v:>7}");
        }
        println!();
    }
    let q = ModType::Qam16.id() as usize;
    let q64 = ModType::Qam64.id() as usize;
    println!(
        "QAM16<->QAM64 mass {} vs mean off-diagonal cell {:.2}",
        m.counts[q][q64] + m.counts[q64][q],
        m.mean_off_diagonal()
    );
    Ok(())
}
