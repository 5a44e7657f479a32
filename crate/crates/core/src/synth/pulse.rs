//! Root-raised-cosine pulse shaping.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unit-energy RRC taps spanning `span_symbols` symbols at `sps` samples per
/// symbol (`span_symbols·sps + 1` taps, exactly symmetric).
pub fn rrc_taps(rolloff: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::InvalidArgument(format!("rrc rolloff {rolloff} must be in (0, 1]")));
    }
    if span_symbols == 0 || !span_symbols.is_multiple_of(2) || sps == 0 {
        return Err(Error::InvalidArgument(format!("rrc span {span_symbols} must be even and sps {sps} positive")));
    }
    let half = span_symbols * sps / 2;
    let beta = rolloff;
    let value = |n: usize| -> f64 {
        let t = n as f64 / sps as f64;
        if n == 0 {
            return 1.0 - beta + 4.0 * beta / PI;
        }
        if (4.0 * beta * t - 1.0).abs() < 1e-12 {
            let a = PI / (4.0 * beta);
            return beta * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
        }
        ((PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos())
            / (PI * t * (1.0 - (4.0 * beta * t).powi(2)))
    };
    let right: Vec<f64> = (0..=half).map(value).collect();
    let mut taps: Vec<f64> = right[1..].iter().rev().copied().chain(right.iter().copied()).collect();
    let energy = taps.iter().map(|v| v * v).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|v| *v /= energy);
    Ok(taps)
}

/// Full linear convolution of a complex signal with real taps.
pub fn convolve(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if x.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + taps.len() - 1];
    for (i, &xv) in x.iter().enumerate() {
        if xv.re == 0.0 && xv.im == 0.0 {
            continue;
        }
        for (k, &h) in taps.iter().enumerate() {
            y[i + k] += xv * h;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_unit_energy() {
        for (beta, span) in [(0.35, 8), (0.25, 8), (1.0, 4), (0.5, 16)] {
            let h = rrc_taps(beta, span, 8).unwrap();
            assert_eq!(h.len(), span * 8 + 1);
            for k in 0..h.len() {
                assert_eq!(h[k], h[h.len() - 1 - k]);
            }
            let e: f64 = h.iter().map(|v| v * v).sum();
            assert!((e - 1.0).abs() < 1e-9);
            assert!(h.iter().all(|v| v.is_finite()));
        }
    }

    fn isi(beta: f64, span: usize) -> f64 {
        let sps = 8;
        let h = rrc_taps(beta, span, sps).unwrap();
        let hc: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let rc = convolve(&hc, &h);
        let mid = h.len() - 1;
        (1..=span)
            .flat_map(|k| [rc[mid + k * sps].re, rc[mid - k * sps].re])
            .fold(0.0f64, |m, v| m.max(v.abs()))
            / rc[mid].re
    }

    #[test]
    fn cascade_is_nyquist() {
        assert!(isi(0.5, 8) < 1e-3);
        assert!(isi(0.35, 24) < 1e-3);
        assert!(isi(0.25, 16) < 1e-3);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(rrc_taps(0.0, 8, 8).is_err());
        assert!(rrc_taps(1.2, 8, 8).is_err());
        assert!(rrc_taps(0.35, 7, 8).is_err());
    }
}
