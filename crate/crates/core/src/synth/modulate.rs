//! Baseband modulators for the digital and analog classes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::synth::pulse::convolve;
use crate::synth::ModType;

/// Modulation index used for binary FSK.
pub const BFSK_INDEX: f64 = 1.0;
/// Modulation index used for continuous-phase FSK.
pub const CPFSK_INDEX: f64 = 0.5;
/// WBFM peak deviation in cycles per sample (75 kHz at 1 MHz).
pub const WBFM_DEVIATION: f64 = 0.075;
/// AM-DSB modulation depth.
pub const AM_DEPTH: f64 = 0.5;
/// Probability that a synthetic audio clip contains a silent stretch.
pub const SILENCE_PROBABILITY: f64 = 0.2;

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

/// Gray-coded amplitude levels `{-(L-1), .., L-1}` indexed by bit pattern.
fn gray_levels(bits: usize) -> Vec<f64> {
    let n = 1 << bits;
    let mut levels = vec![0.0; n];
    for k in 0..n {
        levels[gray(k)] = (2 * k) as f64 - (n - 1) as f64;
    }
    levels
}

/// Bits per symbol and unit-average-energy constellation, indexed by the
/// symbol's bit pattern (MSB first).
pub fn constellation(m: ModType) -> Result<(usize, Vec<Complex64>)> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Ok(match m {
        ModType::Bpsk => (1, vec![c(-1.0, 0.0), c(1.0, 0.0)]),
        ModType::Qpsk => {
            let pts = (0..4)
                .map(|v| c(if v & 2 != 0 { 1.0 } else { -1.0 }, if v & 1 != 0 { 1.0 } else { -1.0 }) * FRAC_1_SQRT_2)
                .collect();
            (2, pts)
        }
        ModType::Psk8 => {
            let mut pts = vec![c(0.0, 0.0); 8];
            for k in 0..8 {
                pts[gray(k)] = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0);
            }
            (3, pts)
        }
        ModType::Pam4 => {
            let lv = gray_levels(2);
            (2, lv.iter().map(|&a| c(a / 5f64.sqrt(), 0.0)).collect())
        }
        ModType::Qam16 | ModType::Qam64 => {
            let axis_bits = if m == ModType::Qam16 { 2 } else { 3 };
            let lv = gray_levels(axis_bits);
            let side = lv.len();
            // mean energy of the square grid: 2 * mean(level^2)
            let norm = (2.0 * lv.iter().map(|a| a * a).sum::<f64>() / side as f64).sqrt();
            let mut pts = Vec::with_capacity(side * side);
            for v in 0..side * side {
                pts.push(c(lv[v >> axis_bits] / norm, lv[v & (side - 1)] / norm));
            }
            (2 * axis_bits, pts)
        }
        other => return Err(Error::InvalidArgument(format!("{other} is not a linear modulation"))),
    })
}

/// Maps bits to constellation symbols.
pub fn map_symbols(m: ModType, bits: &[u8]) -> Result<Vec<Complex64>> {
    let (bps, pts) = constellation(m)?;
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::InvalidArgument(format!(
            "{m}: bit count {} not divisible by {bps} bits per symbol",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(bps)
        .map(|chunk| pts[chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)])
        .collect())
}

fn normalize_power(x: &mut [Complex64]) {
    let p = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    if p > 0.0 {
        let s = 1.0 / p.sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Upsamples mapped symbols by `sps`, pulse-shapes with `rrc` and scales to
/// unit average power. Output length is `symbols·sps + rrc.len() − 1`.
pub fn modulate_linear(m: ModType, bits: &[u8], sps: usize, rrc: &[f64]) -> Result<Vec<Complex64>> {
    let symbols = map_symbols(m, bits)?;
    let mut up = vec![Complex64::new(0.0, 0.0); symbols.len() * sps];
    for (i, s) in symbols.into_iter().enumerate() {
        up[i * sps] = s;
    }
    let mut y = convolve(&up, rrc);
    normalize_power(&mut y);
    Ok(y)
}

/// Continuous-phase FSK: each sample advances the phase by `±π·h/sps`
/// (bit 1 up, bit 0 down). Constant unit envelope.
pub fn modulate_fsk(m: ModType, bits: &[u8], sps: usize, mod_index: f64) -> Result<Vec<Complex64>> {
    if !matches!(m, ModType::Bfsk | ModType::Cpfsk) {
        return Err(Error::InvalidArgument(format!("{m} is not an FSK modulation")));
    }
    if !(mod_index > 0.0) || sps == 0 {
        return Err(Error::InvalidArgument(format!("FSK needs mod_index > 0 and sps > 0 (got {mod_index}, {sps})")));
    }
    let step = PI * mod_index / sps as f64;
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(bits.len() * sps);
    for &b in bits {
        let dir = if b & 1 == 1 { 1.0 } else { -1.0 };
        for _ in 0..sps {
            phase = (phase + dir * step).rem_euclid(2.0 * PI);
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    Ok(out)
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    fft.process(buf);
}

/// Synthetic analog source with the default silence probability.
pub fn synth_audio(rng: &mut SeededRng, length: usize, bandwidth_fraction: f64) -> Result<Vec<f64>> {
    synth_audio_with(rng, length, bandwidth_fraction, SILENCE_PROBABILITY)
}

/// Band-limited surrogate for recorded audio: 3 to 8 tones plus noise, both
/// confined to `bandwidth_fraction` of the sample rate, with an optional
/// silent stretch (10 to 30 % of the clip, raised-cosine edges). Peak |x| = 1.
pub fn synth_audio_with(
    rng: &mut SeededRng,
    length: usize,
    bandwidth_fraction: f64,
    silence_probability: f64,
) -> Result<Vec<f64>> {
    if !(bandwidth_fraction > 0.0 && bandwidth_fraction < 0.5) {
        return Err(Error::InvalidArgument(format!("audio bandwidth fraction {bandwidth_fraction} must be in (0, 0.5)")));
    }
    if length < 16 {
        return Err(Error::InvalidArgument(format!("audio length {length} too short")));
    }
    // Build the one-sided spectrum directly so the band limit is exact.
    let kmax = ((bandwidth_fraction * length as f64).floor() as usize).max(1);
    let mut spec = vec![Complex64::new(0.0, 0.0); length];
    let tones = 3 + rng.below(6);
    let tone_top = (kmax / 2).max(1);
    for _ in 0..tones {
        let k = 1 + rng.below(tone_top);
        let amp = rng.uniform_range(0.2, 1.0);
        spec[k] += Complex64::from_polar(amp * length as f64 / 2.0, rng.uniform_range(0.0, 2.0 * PI));
    }
    let noise_scale = 0.3 * (length as f64).sqrt();
    for bin in spec.iter_mut().take(kmax + 1).skip(1) {
        *bin += Complex64::new(rng.normal(), rng.normal()) * noise_scale;
    }
    fft_in_place(&mut spec, true);
    let mut x: Vec<f64> = spec.iter().map(|v| 2.0 * v.re / length as f64).collect();

    if rng.uniform() < silence_probability {
        let span = ((rng.uniform_range(0.1, 0.3) * length as f64) as usize).max(1);
        let start = rng.below(length - span + 1);
        let ramp = (0.8 / bandwidth_fraction).ceil() as usize;
        for (n, v) in x.iter_mut().enumerate() {
            let gain = if n >= start && n < start + span {
                0.0
            } else if n < start && start - n <= ramp {
                let d = (start - n) as f64 - 0.5;
                0.5 - 0.5 * (PI * d / ramp as f64).cos()
            } else if n >= start + span && n - (start + span) < ramp {
                let d = (n - (start + span)) as f64 + 0.5;
                0.5 - 0.5 * (PI * d / ramp as f64).cos()
            } else {
                1.0
            };
            *v *= gain;
        }
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
    Ok(x)
}

/// Analog modulation of a normalized audio clip.
pub fn modulate_analog(m: ModType, audio: &[f64]) -> Result<Vec<Complex64>> {
    match m {
        ModType::Wbfm => {
            let mut phase = 0.0f64;
            Ok(audio
                .iter()
                .map(|&a| {
                    phase = (phase + 2.0 * PI * WBFM_DEVIATION * a).rem_euclid(2.0 * PI);
                    Complex64::from_polar(1.0, phase)
                })
                .collect())
        }
        ModType::AmDsb => Ok(audio.iter().map(|&a| Complex64::new(1.0 + AM_DEPTH * a, 0.0)).collect()),
        ModType::AmSsb => {
            // analytic signal: keep DC (and Nyquist), double positive bins, zero negative bins
            let n = audio.len();
            let mut buf: Vec<Complex64> = audio.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            fft_in_place(&mut buf, false);
            for (k, v) in buf.iter_mut().enumerate() {
                if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                    continue;
                } else if k < n.div_ceil(2) {
                    *v *= 2.0;
                } else {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            fft_in_place(&mut buf, true);
            let inv = 1.0 / n as f64;
            Ok(buf.into_iter().map(|v| v * inv).collect())
        }
        other => Err(Error::InvalidArgument(format!("{other} is not an analog modulation"))),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::synth::pulse::rrc_taps;

    pub(crate) fn periodogram(x: &[Complex64]) -> Vec<f64> {
        let mut buf = x.to_vec();
        fft_in_place(&mut buf, false);
        buf.iter().map(|v| v.norm_sqr()).collect()
    }

    fn random_bits(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = SeededRng::new(seed);
        (0..n).map(|_| rng.bit()).collect()
    }

    #[test]
    fn bpsk_is_antipodal() {
        let s = map_symbols(ModType::Bpsk, &[0, 1, 1, 0]).unwrap();
        let re: Vec<f64> = s.iter().map(|v| v.re).collect();
        assert_eq!(re, vec![-1.0, 1.0, 1.0, -1.0]);
        assert!(s.iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn pam4_levels_have_unit_energy() {
        let (_, pts) = constellation(ModType::Pam4).unwrap();
        let mut levels: Vec<f64> = pts.iter().map(|p| p.re * 5f64.sqrt()).collect();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in levels.iter().zip([-3.0, -1.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let e: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam16_energy_and_min_distance() {
        let (bps, pts) = constellation(ModType::Qam16).unwrap();
        assert_eq!((bps, pts.len()), (4, 16));
        let e: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-12);
        let mut dmin = f64::INFINITY;
        for i in 0..16 {
            for j in i + 1..16 {
                dmin = dmin.min((pts[i] - pts[j]).norm());
            }
        }
        assert!((dmin - 2.0 / 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constellations_are_gray_coded() {
        for m in [ModType::Qpsk, ModType::Psk8, ModType::Qam16, ModType::Qam64, ModType::Pam4] {
            let (_, pts) = constellation(m).unwrap();
            let e: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m}");
            // nearest neighbours differ in exactly one bit
            let mut dmin = f64::INFINITY;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    dmin = dmin.min((pts[i] - pts[j]).norm());
                }
            }
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if ((pts[i] - pts[j]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{m}: {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn linear_output_has_unit_power() {
        let rrc = rrc_taps(0.35, 8, 8).unwrap();
        for m in [ModType::Bpsk, ModType::Qpsk, ModType::Psk8, ModType::Qam16, ModType::Qam64, ModType::Pam4] {
            let bits = random_bits(6 * 64, m.id() as u64);
            let y = modulate_linear(m, &bits, 8, &rrc).unwrap();
            let p = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
            assert!((p - 1.0).abs() < 1e-3, "{m}: {p}");
        }
    }

    #[test]
    fn bit_count_must_fill_symbols() {
        let rrc = rrc_taps(0.35, 8, 8).unwrap();
        assert!(modulate_linear(ModType::Qam16, &[0, 1, 1], 8, &rrc).is_err());
    }

    #[test]
    fn fsk_has_constant_envelope_and_continuous_phase() {
        for (m, h) in [(ModType::Bfsk, BFSK_INDEX), (ModType::Cpfsk, CPFSK_INDEX)] {
            let y = modulate_fsk(m, &random_bits(64, 2), 8, h).unwrap();
            let mut prev = Complex64::new(1.0, 0.0);
            for v in &y {
                assert!((v.norm() - 1.0).abs() < 1e-6);
                let dphi = (v * prev.conj()).arg().abs();
                assert!(dphi <= PI * h / 8.0 + 1e-9);
                prev = *v;
            }
        }
    }

    #[test]
    fn all_zero_bits_give_a_single_tone() {
        let h = CPFSK_INDEX;
        let sps = 8;
        let y = modulate_fsk(ModType::Cpfsk, &[0; 32], sps, h).unwrap();
        // expected frequency: -h/2 of the symbol rate, i.e. -h/(2 sps) cycles per sample
        let f = -h / (2.0 * sps as f64);
        for (n, v) in y.iter().enumerate() {
            let want = Complex64::from_polar(1.0, 2.0 * PI * f * (n + 1) as f64);
            assert!((v - want).norm() < 1e-9);
        }
    }

    #[test]
    fn audio_peak_is_one_and_band_limited() {
        for seed in 0..40 {
            let mut rng = SeededRng::new(seed);
            let bw = 0.05;
            let x = synth_audio(&mut rng, 512, bw).unwrap();
            let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((peak - 1.0).abs() < 1e-12);
            let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let p = periodogram(&xc);
            let n = x.len();
            let above: f64 = p
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    let f = if *k <= n / 2 { *k as f64 } else { (n - k) as f64 } / n as f64;
                    f > bw
                })
                .map(|(_, v)| v)
                .sum();
            let total: f64 = p.iter().sum();
            assert!(above / total < 0.01, "seed {seed}: {}", above / total);
        }
    }

    #[test]
    fn forced_silence_leaves_a_zero_segment() {
        let mut rng = SeededRng::new(5);
        let x = synth_audio_with(&mut rng, 400, 0.05, 1.0).unwrap();
        let mut run = 0;
        let mut best = 0;
        for v in &x {
            run = if *v == 0.0 { run + 1 } else { 0 };
            best = best.max(run);
        }
        assert!(best >= 40, "longest zero run {best}");
    }

    #[test]
    fn wbfm_constant_envelope() {
        let mut rng = SeededRng::new(9);
        let a = synth_audio(&mut rng, 300, 0.05).unwrap();
        let y = modulate_analog(ModType::Wbfm, &a).unwrap();
        assert!(y.iter().all(|v| (v.norm() - 1.0).abs() < 1e-6));
    }

    #[test]
    fn am_dsb_of_silence_is_a_carrier() {
        let y = modulate_analog(ModType::AmDsb, &[0.0; 64]).unwrap();
        assert!(y.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn am_ssb_rejects_lower_sideband() {
        let mut rng = SeededRng::new(13);
        let a = synth_audio_with(&mut rng, 512, 0.05, 0.0).unwrap();
        let y = modulate_analog(ModType::AmSsb, &a).unwrap();
        let p = periodogram(&y);
        let n = p.len();
        let kept: f64 = p[1..n / 2].iter().sum();
        let rejected: f64 = p[n / 2 + 1..].iter().sum();
        assert!(rejected < 0.01 * kept, "{rejected} vs {kept}");
    }
}
