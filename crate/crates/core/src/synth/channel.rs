//! Channel impairments: multipath fading, clock and carrier drift, scaling
//! and additive white Gaussian noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// One multipath component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingTap {
    /// Delay in samples.
    pub delay: usize,
    /// Mean power relative to the direct path, in dB.
    pub power_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Target SNR in dB; the generator overrides this per cell.
    pub snr_db: f64,
    /// Std of the per-sample carrier-frequency random-walk step (rad/sample).
    pub cfo_walk_std: f64,
    /// Initial carrier frequency offset (rad/sample).
    pub cfo_offset: f64,
    /// Std of the per-sample clock-rate random-walk step (ppm/sample).
    pub sro_ppm_std: f64,
    pub fading_taps: Vec<FadingTap>,
    /// Draw a uniform carrier phase in `[0, 2π)`.
    pub random_phase: bool,
    /// Amplitude scale drawn log-uniformly from `[lo, hi]`.
    pub scale_range: [f64; 2],
    /// Largest random slice origin (translation), in samples.
    pub max_time_offset: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: 10.0,
            cfo_walk_std: 1e-4,
            cfo_offset: 0.0,
            sro_ppm_std: 0.01,
            fading_taps: vec![
                FadingTap { delay: 0, power_db: 0.0 },
                FadingTap { delay: 2, power_db: -6.0 },
                FadingTap { delay: 5, power_db: -12.0 },
            ],
            random_phase: true,
            scale_range: [0.5, 2.0],
            max_time_offset: 64,
        }
    }
}

impl ChannelConfig {
    /// A channel that passes its input through unchanged.
    pub fn identity() -> Self {
        Self {
            snr_db: f64::INFINITY,
            cfo_walk_std: 0.0,
            cfo_offset: 0.0,
            sro_ppm_std: 0.0,
            fading_taps: vec![FadingTap { delay: 0, power_db: 0.0 }],
            random_phase: false,
            scale_range: [1.0, 1.0],
            max_time_offset: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, detail: String| Err(Error::Config { key: format!("channel.{key}"), detail });
        if !(self.cfo_walk_std >= 0.0) {
            return bad("cfo_walk_std", format!("must be >= 0, got {}", self.cfo_walk_std));
        }
        if !(self.sro_ppm_std >= 0.0) {
            return bad("sro_ppm_std", format!("must be >= 0, got {}", self.sro_ppm_std));
        }
        if !self.cfo_offset.is_finite() {
            return bad("cfo_offset", "must be finite".into());
        }
        match self.fading_taps.first() {
            Some(t) if t.delay == 0 && t.power_db == 0.0 => {}
            _ => return bad("fading_taps", "tap 0 must be the direct path (delay 0, 0 dB)".into()),
        }
        if self.fading_taps.iter().any(|t| !t.power_db.is_finite()) {
            return bad("fading_taps", "tap powers must be finite".into());
        }
        let [lo, hi] = self.scale_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("scale_range", format!("need 0 < lo <= hi, got [{lo}, {hi}]"));
        }
        Ok(())
    }

    pub fn max_delay(&self) -> usize {
        self.fading_taps.iter().map(|t| t.delay).max().unwrap_or(0)
    }

    /// Extra input samples `apply_channel` consumes beyond its output length.
    pub fn input_margin(&self) -> usize {
        let sro = if self.sro_ppm_std > 0.0 { 8 } else { 0 };
        self.max_delay() + sro
    }
}

fn multipath(x: &[Complex64], taps: &[FadingTap], rng: &mut SeededRng) -> Vec<Complex64> {
    if taps.len() == 1 {
        return x.to_vec();
    }
    let gains: Vec<Complex64> = taps
        .iter()
        .enumerate()
        .map(|(k, t)| {
            if k == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                let sigma = (10f64.powf(t.power_db / 10.0) / 2.0).sqrt();
                Complex64::new(rng.normal() * sigma, rng.normal() * sigma)
            }
        })
        .collect();
    let maxd = taps.iter().map(|t| t.delay).max().unwrap_or(0);
    (0..x.len() - maxd)
        .map(|m| taps.iter().zip(&gains).map(|(t, g)| g * x[m + maxd - t.delay]).sum())
        .collect()
}

fn resample(x: &[Complex64], ppm_std: f64, rng: &mut SeededRng) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(x.len());
    let mut pos = 0.0f64;
    let mut rate = 0.0f64;
    while pos + 1.0 < (x.len() - 1) as f64 {
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        out.push(x[i] * (1.0 - frac) + x[i + 1] * frac);
        rate += rng.normal() * ppm_std * 1e-6;
        pos += 1.0 + rate;
    }
    out
}

/// Multipath FIR, clock-drift resampling, carrier drift plus phase offset,
/// then amplitude scaling; the result is cut to `out_len` samples.
pub fn apply_channel(
    x: &[Complex64],
    cfg: &ChannelConfig,
    rng: &mut SeededRng,
    out_len: usize,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let needed = out_len + cfg.input_margin();
    if x.len() < needed {
        return Err(Error::InsufficientLength { needed, got: x.len() });
    }
    let mut y = multipath(x, &cfg.fading_taps, rng);
    if cfg.sro_ppm_std > 0.0 {
        y = resample(&y, cfg.sro_ppm_std, rng);
    }
    let mut phase = if cfg.random_phase { rng.uniform_range(0.0, 2.0 * PI) } else { 0.0 };
    let mut freq = cfg.cfo_offset;
    if phase != 0.0 || freq != 0.0 || cfg.cfo_walk_std > 0.0 {
        for v in y.iter_mut() {
            *v *= Complex64::from_polar(1.0, phase);
            freq += rng.normal() * cfg.cfo_walk_std;
            phase = (phase + freq).rem_euclid(2.0 * PI);
        }
    }
    let [lo, hi] = cfg.scale_range;
    let scale = if lo == hi { lo } else { (lo.ln() + rng.uniform() * (hi.ln() - lo.ln())).exp() };
    if scale != 1.0 {
        y.iter_mut().for_each(|v| *v *= scale);
    }
    if y.len() < out_len {
        return Err(Error::InsufficientLength { needed: out_len, got: y.len() });
    }
    y.truncate(out_len);
    Ok(y)
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

/// Adds complex white Gaussian noise with per-sample variance
/// `P_x / 10^(snr/10)`, `P_x` being the mean power of `x`.
pub fn add_awgn(x: &[Complex64], snr_db: f64, rng: &mut SeededRng) -> Result<Vec<Complex64>> {
    let p = mean_power(x);
    if x.is_empty() || p == 0.0 {
        return Err(Error::ZeroPower { op: "add_awgn" });
    }
    if snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("add_awgn: snr {snr_db} dB")));
    }
    let sigma = (p / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    Ok(x.iter().map(|v| v + Complex64::new(rng.normal() * sigma, rng.normal() * sigma)).collect())
}

/// `10·log10(Σ|clean|² / Σ|noisy − clean|²)`; `+∞` when there is no noise.
pub fn measure_snr(clean: &[Complex64], noisy: &[Complex64]) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(Error::shape("measure_snr", format!("lengths {} and {} differ", clean.len(), noisy.len())));
    }
    let ps: f64 = clean.iter().map(|v| v.norm_sqr()).sum();
    let pn: f64 = clean.iter().zip(noisy).map(|(c, n)| (n - c).norm_sqr()).sum();
    if pn == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ps / pn).log10())
}
