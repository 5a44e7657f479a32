//! Synthesizes a small labeled dataset, writes it to disk and reads it back.
//!
//! `cargo run --release --example generate_dataset -- [per_cell] [seed]`

use amc_core::synth::{build_dataset, read_dataset, write_dataset, GenConfig};

fn main() -> amc_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_cell = args.next().map_or(10, |s| s.parse().expect("per_cell"));
    let seed = args.next().map_or(7, |s| s.parse().expect("seed"));
    let cfg = GenConfig { per_cell, seed, ..GenConfig::default() };
    let ds = build_dataset(&cfg)?;
    println!("{} frames of {} samples, {} classes, {} SNRs", ds.len(), ds.frame_len, ds.mods().len(), ds.snrs().len());

    let dir = std::env::temp_dir().join(format!("amc-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("dataset.amcd");
    write_dataset(&ds, &path)?;
    let back = read_dataset(&path)?;
    let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!("wrote {} ({bytes} bytes), read back identical: {}", path.display(), back == ds);

    for m in ds.mods() {
        let frames: Vec<_> = ds.samples.iter().filter(|s| s.mod_type == m && s.snr_db == 18).collect();
        let rms = frames.iter().map(|s| s.frame.rms()).sum::<f64>() / frames.len() as f64;
        println!("  {:<7} mean rms at 18 dB: {rms:.3}", m.name());
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
