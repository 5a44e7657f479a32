//! Drives each modulator directly and checks the calibrated AWGN channel.

use amc_core::synth::{
    add_awgn, measure_snr, modulate_analog, modulate_fsk, modulate_linear, rrc_taps, synth_audio, ModType,
};
use amc_core::SeededRng;
use num_complex::Complex64;

fn envelope_spread(s: &[Complex64]) -> f64 {
    let (lo, hi) = s.iter().map(|v| v.norm()).fold((f64::MAX, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    hi - lo
}

fn main() -> amc_core::Result<()> {
    let mut rng = SeededRng::new(11);
    let taps = rrc_taps(0.35, 8, 8)?;
    let bits: Vec<u8> = (0..480).map(|_| rng.bit()).collect();
    let audio = synth_audio(&mut rng, 1024, 0.05)?;

    for m in ModType::ALL {
        let s = match m {
            ModType::Bfsk => modulate_fsk(m, &bits, 8, 1.0)?,
            ModType::Cpfsk => modulate_fsk(m, &bits, 8, 0.5)?,
            ModType::Wbfm | ModType::AmDsb | ModType::AmSsb => modulate_analog(m, &audio)?,
            _ => modulate_linear(m, &bits, 8, &taps)?,
        };
        let power = s.iter().map(|v| v.norm_sqr()).sum::<f64>() / s.len() as f64;
        println!("{:<7} {:>5} samples  power {power:.3}  envelope spread {:.2e}", m.name(), s.len(), envelope_spread(&s));
    }

    println!("\nAWGN calibration on QPSK (mean of 50 frames):");
    for target in [-20.0, -10.0, 0.0, 10.0, 18.0] {
        let mut acc = 0.0;
        for _ in 0..50 {
            let b: Vec<u8> = (0..256).map(|_| rng.bit()).collect();
            let clean = modulate_linear(ModType::Qpsk, &b, 8, &taps)?;
            let clean = &clean[taps.len()..taps.len() + 128];
            acc += measure_snr(clean, &add_awgn(clean, target, &mut rng)?)?;
        }
        println!("  target {target:>5.1} dB  measured {:>7.3} dB", acc / 50.0);
    }
    Ok(())
}
