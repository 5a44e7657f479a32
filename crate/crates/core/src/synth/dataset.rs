//! Labeled frames, dataset generation and stratified splitting.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{par_map, worker_count};
use crate::rng::SeededRng;
use crate::synth::channel::{add_awgn, apply_channel, ChannelConfig};
use crate::synth::modulate::{
    modulate_analog, modulate_fsk, modulate_linear, synth_audio, BFSK_INDEX, CPFSK_INDEX,
};
use crate::synth::pulse::rrc_taps;
use crate::synth::{ModType, NUM_CLASSES};
use crate::tensor::{Scalar, Tensor};

/// The twenty SNR levels, −20 dB to 18 dB in 2 dB steps.
pub const SNR_LADDER: [i8; 20] = [-20, -18, -16, -14, -12, -10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10, 12, 14, 16, 18];

#[derive(Clone, Debug, PartialEq)]
pub struct IqFrame {
    pub i: Vec<f32>,
    pub q: Vec<f32>,
}

impl IqFrame {
    pub fn new(i: Vec<f32>, q: Vec<f32>) -> Result<Self> {
        if i.len() != q.len() || i.is_empty() {
            return Err(Error::shape("IqFrame", format!("I has {} samples, Q has {}", i.len(), q.len())));
        }
        if i.iter().chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { stage: "IqFrame".into() });
        }
        Ok(Self { i, q })
    }

    pub fn from_complex(x: &[Complex64]) -> Result<Self> {
        Self::new(x.iter().map(|v| v.re as f32).collect(), x.iter().map(|v| v.im as f32).collect())
    }

    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.i.iter().zip(&self.q).map(|(&a, &b)| Complex64::new(a as f64, b as f64)).collect()
    }

    /// `sqrt(mean(i² + q²))`.
    pub fn rms(&self) -> f64 {
        let s: f64 = self.i.iter().zip(&self.q).map(|(&a, &b)| (a as f64).powi(2) + (b as f64).powi(2)).sum();
        (s / self.len() as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub frame: IqFrame,
    pub mod_type: ModType,
    pub snr_db: i8,
}

/// How frames are presented to a model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    #[default]
    Iq,
    AmplitudePhase,
}

/// Amplitude (scaled to unit maximum) and phase (`atan2(q, i)/π`) rows.
/// An all-zero frame maps to two zero rows.
pub fn to_amplitude_phase(frame: &IqFrame) -> (Vec<f32>, Vec<f32>) {
    let amp: Vec<f64> = frame.i.iter().zip(&frame.q).map(|(&a, &b)| (a as f64).hypot(b as f64)).collect();
    let peak = amp.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak == 0.0 {
        return (vec![0.0; frame.len()], vec![0.0; frame.len()]);
    }
    let a = amp.iter().map(|v| (v / peak) as f32).collect();
    let p = frame
        .i
        .iter()
        .zip(&frame.q)
        .map(|(&i, &q)| ((q as f64).atan2(i as f64) / std::f64::consts::PI) as f32)
        .collect();
    (a, p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub frame_len: usize,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(frame_len: usize, samples: Vec<LabeledSample>) -> Result<Self> {
        if let Some((k, s)) = samples.iter().enumerate().find(|(_, s)| s.frame.len() != frame_len) {
            return Err(Error::shape("Dataset", format!("sample {k} has {} samples, expected {frame_len}", s.frame.len())));
        }
        Ok(Self { frame_len, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample count per (modulation, SNR) cell.
    pub fn cell_counts(&self) -> BTreeMap<(ModType, i8), usize> {
        let mut m = BTreeMap::new();
        for s in &self.samples {
            *m.entry((s.mod_type, s.snr_db)).or_insert(0) += 1;
        }
        m
    }

    /// Distinct modulations present, in label order.
    pub fn mods(&self) -> Vec<ModType> {
        let mut v: Vec<ModType> = self.cell_counts().keys().map(|k| k.0).collect();
        v.dedup();
        v
    }

    /// Distinct SNRs present, ascending.
    pub fn snrs(&self) -> Vec<i8> {
        let mut v: Vec<i8> = self.samples.iter().map(|s| s.snr_db).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset { frame_len: self.frame_len, samples: indices.iter().map(|&i| self.samples[i].clone()).collect() }
    }

    pub fn filter(&self, mut keep: impl FnMut(&LabeledSample) -> bool) -> Dataset {
        Dataset { frame_len: self.frame_len, samples: self.samples.iter().filter(|s| keep(s)).cloned().collect() }
    }

    pub fn labels(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.samples[i].mod_type.id() as usize).collect()
    }

    /// Stacks the selected frames into `[N, 2, frame_len]`.
    pub fn to_tensor<F: Scalar>(&self, indices: &[usize], format: InputFormat) -> Result<Tensor<F>> {
        let t = self.frame_len;
        let mut data = Vec::with_capacity(indices.len() * 2 * t);
        for &k in indices {
            let frame = &self.samples[k].frame;
            let (a, b) = match format {
                InputFormat::Iq => (frame.i.clone(), frame.q.clone()),
                InputFormat::AmplitudePhase => to_amplitude_phase(frame),
            };
            data.extend(a.iter().chain(&b).map(|&v| F::lit(v as f64)));
        }
        Tensor::new(vec![indices.len(), 2, t], data)
    }
}

/// Generator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub samples_per_symbol: usize,
    pub frame_len: usize,
    /// Samples generated per (modulation, SNR) cell.
    pub per_cell: usize,
    pub rrc_rolloff: f64,
    pub rrc_span: usize,
    pub seed: u64,
    pub channel: ChannelConfig,
    pub mods: Vec<ModType>,
    pub snrs: Vec<i8>,
    /// Analog source bandwidth as a fraction of the sample rate.
    pub audio_bandwidth: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            samples_per_symbol: 8,
            frame_len: 128,
            per_cell: 1000,
            rrc_rolloff: 0.35,
            rrc_span: 8,
            seed: 0,
            channel: ChannelConfig::default(),
            mods: ModType::ALL.to_vec(),
            snrs: SNR_LADDER.to_vec(),
            audio_bandwidth: 0.05,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, detail: String| Err(Error::Config { key: key.into(), detail });
        if self.samples_per_symbol == 0 {
            return bad("samples_per_symbol", "must be >= 1".into());
        }
        if self.frame_len == 0 || self.frame_len > u16::MAX as usize {
            return bad("frame_len", format!("must be in 1..=65535, got {}", self.frame_len));
        }
        if self.per_cell == 0 {
            return bad("per_cell", "must be >= 1".into());
        }
        if self.mods.is_empty() {
            return bad("mods", "must list at least one modulation".into());
        }
        if self.snrs.is_empty() {
            return bad("snrs", "must list at least one SNR".into());
        }
        if !(self.audio_bandwidth > 0.0 && self.audio_bandwidth < 0.5) {
            return bad("audio_bandwidth", format!("must be in (0, 0.5), got {}", self.audio_bandwidth));
        }
        rrc_taps(self.rrc_rolloff, self.rrc_span, self.samples_per_symbol)
            .map_err(|e| Error::Config { key: "rrc_rolloff".into(), detail: e.to_string() })?;
        self.channel.validate()
    }

    pub fn total_samples(&self) -> usize {
        self.mods.len() * self.snrs.len() * self.per_cell
    }
}

fn source_signal(cfg: &GenConfig, taps: &[f64], m: ModType, len: usize, rng: &mut SeededRng) -> Result<Vec<Complex64>> {
    let sps = cfg.samples_per_symbol;
    match m {
        ModType::Bfsk | ModType::Cpfsk => {
            let bits: Vec<u8> = (0..len.div_ceil(sps)).map(|_| rng.bit()).collect();
            let h = if m == ModType::Bfsk { BFSK_INDEX } else { CPFSK_INDEX };
            let mut y = modulate_fsk(m, &bits, sps, h)?;
            y.truncate(len);
            Ok(y)
        }
        m if m.is_analog() => {
            let audio = synth_audio(rng, len, cfg.audio_bandwidth)?;
            modulate_analog(m, &audio)
        }
        _ => {
            let transient = taps.len() - 1;
            let symbols = (len + transient).div_ceil(sps);
            let bps = crate::synth::modulate::constellation(m)?.0;
            let bits: Vec<u8> = (0..symbols * bps).map(|_| rng.bit()).collect();
            let y = modulate_linear(m, &bits, sps, taps)?;
            Ok(y[transient..transient + len].to_vec())
        }
    }
}

/// One labeled frame. Its random stream is derived from
/// `(seed, modulation, snr, index)` alone.
pub fn generate_sample(cfg: &GenConfig, taps: &[f64], m: ModType, snr_db: i8, index: usize) -> Result<LabeledSample> {
    let mut rng = SeededRng::derived(cfg.seed, &[m.id() as u64, snr_db as i64 as u64, index as u64]);
    let ch = &cfg.channel;
    let span = cfg.frame_len + ch.max_time_offset;
    let src = source_signal(cfg, taps, m, span + ch.input_margin(), &mut rng)?;
    let impaired = apply_channel(&src, ch, &mut rng, span)?;
    let origin = rng.below(ch.max_time_offset + 1);
    let frame = &impaired[origin..origin + cfg.frame_len];
    let mut noisy = add_awgn(frame, snr_db as f64, &mut rng)?;
    let rms = (noisy.iter().map(|v| v.norm_sqr()).sum::<f64>() / noisy.len() as f64).sqrt();
    if !(rms > 0.0 && rms.is_finite()) {
        return Err(Error::NonFinite { stage: format!("frame normalization ({m}, {snr_db} dB, #{index})") });
    }
    noisy.iter_mut().for_each(|v| *v /= rms);
    Ok(LabeledSample { frame: IqFrame::from_complex(&noisy)?, mod_type: m, snr_db })
}

/// Generates `per_cell` frames for every (modulation, SNR) pair, ordered by
/// modulation, then SNR, then index. Uses `AMC_THREADS` workers.
pub fn build_dataset(cfg: &GenConfig) -> Result<Dataset> {
    build_dataset_with_workers(cfg, worker_count())
}

pub fn build_dataset_with_workers(cfg: &GenConfig, workers: usize) -> Result<Dataset> {
    cfg.validate()?;
    let taps = rrc_taps(cfg.rrc_rolloff, cfg.rrc_span, cfg.samples_per_symbol)?;
    let per_mod = cfg.snrs.len() * cfg.per_cell;
    let samples = par_map(cfg.total_samples(), workers, |k| {
        let m = cfg.mods[k / per_mod];
        let snr = cfg.snrs[(k % per_mod) / cfg.per_cell];
        generate_sample(cfg, &taps, m, snr, k % cfg.per_cell)
    });
    Dataset::new(cfg.frame_len, samples.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Index form of [`split_stratified`]: each (modulation, SNR) cell sends
/// `round(fraction·n)` of its samples to the first part. Both index lists
/// come back sorted.
pub fn split_indices(ds: &Dataset, fraction: f64, rng: &mut SeededRng) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction {fraction} must be in (0, 1)")));
    }
    let mut cells: BTreeMap<(ModType, i8), Vec<usize>> = BTreeMap::new();
    for (k, s) in ds.samples.iter().enumerate() {
        cells.entry((s.mod_type, s.snr_db)).or_default().push(k);
    }
    for m in ds.mods() {
        for snr in ds.snrs() {
            if !cells.contains_key(&(m, snr)) {
                return Err(Error::EmptyCell { mod_name: m.name(), snr_db: snr });
            }
        }
    }
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for idx in cells.values_mut() {
        rng.shuffle(idx);
        let take = (fraction * idx.len() as f64).round() as usize;
        first.extend_from_slice(&idx[..take]);
        second.extend_from_slice(&idx[take..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

pub fn split_stratified(ds: &Dataset, fraction: f64, rng: &mut SeededRng) -> Result<(Dataset, Dataset)> {
    let (a, b) = split_indices(ds, fraction, rng)?;
    Ok((ds.subset(&a), ds.subset(&b)))
}

/// Label id → class name, for reports.
pub fn class_names() -> [&'static str; NUM_CLASSES] {
    ModType::ALL.map(ModType::name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(per_cell: usize) -> GenConfig {
        GenConfig { per_cell, seed: 42, snrs: vec![-20, 0, 18], ..GenConfig::default() }
    }

    #[test]
    fn every_class_generates_normalized_frames() {
        let ds = build_dataset_with_workers(&small_cfg(3), 1).unwrap();
        assert_eq!(ds.len(), 11 * 3 * 3);
        assert!(ds.cell_counts().values().all(|&c| c == 3));
        for s in &ds.samples {
            assert_eq!(s.frame.len(), 128);
            assert!((s.frame.rms() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn generation_is_worker_count_independent() {
        let cfg = small_cfg(2);
        let a = build_dataset_with_workers(&cfg, 1).unwrap();
        let b = build_dataset_with_workers(&cfg, 3).unwrap();
        assert_eq!(a, b);
        let c = build_dataset_with_workers(&GenConfig { seed: 43, ..cfg }, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn desk_split_sizes() {
        let cfg = GenConfig { per_cell: 5, snrs: SNR_LADDER.to_vec(), mods: vec![ModType::Bpsk, ModType::Wbfm], ..small_cfg(5) };
        let ds = build_dataset_with_workers(&cfg, 1).unwrap();
        let (tr, te) = split_indices(&ds, 0.8, &mut SeededRng::new(1)).unwrap();
        assert_eq!((tr.len(), te.len()), (160, 40));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
    }

    #[test]
    fn missing_cell_is_reported() {
        let ds = build_dataset_with_workers(&small_cfg(1), 1).unwrap();
        let holed = ds.filter(|s| !(s.mod_type == ModType::Qpsk && s.snr_db == 0));
        let err = split_indices(&holed, 0.5, &mut SeededRng::new(0)).unwrap_err();
        assert!(matches!(err, Error::EmptyCell { mod_name: "QPSK", snr_db: 0 }));
    }

    #[test]
    fn amplitude_phase_axis_points() {
        let f = IqFrame::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let (a, p) = to_amplitude_phase(&f);
        assert_eq!(a, vec![1.0, 1.0]);
        assert_eq!(p, vec![0.0, 0.5]);
        let z = IqFrame::new(vec![0.0; 4], vec![0.0; 4]).unwrap();
        assert_eq!(to_amplitude_phase(&z), (vec![0.0; 4], vec![0.0; 4]));
    }

    #[test]
    fn to_tensor_layout() {
        let ds = Dataset::new(
            2,
            vec![LabeledSample {
                frame: IqFrame::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap(),
                mod_type: ModType::Qam16,
                snr_db: 4,
            }],
        )
        .unwrap();
        let t: Tensor<f64> = ds.to_tensor(&[0, 0], InputFormat::Iq).unwrap();
        assert_eq!(t.shape(), &[2, 2, 2]);
        assert_eq!(t.data(), &[1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ds.labels(&[0]), vec![3]);
    }
}
