//! Per-SNR accuracy and confusion matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Network;
use crate::parallel::{par_map, worker_count};
use crate::synth::{Dataset, NUM_CLASSES};
use crate::tensor::{Scalar, Tensor};

/// Anything that assigns a class id to dataset samples.
pub trait Classifier {
    fn classify(&self, ds: &Dataset, indices: &[usize]) -> Result<Vec<usize>>;
}

/// Index of the largest entry in each row; ties go to the lowest index.
pub fn argmax_rows<F: Scalar>(probs: &Tensor<F>) -> Vec<usize> {
    let k = *probs.shape().last().unwrap();
    probs
        .data()
        .chunks_exact(k)
        .map(|row| row.iter().enumerate().fold(0, |best, (j, &v)| if v > row[best] { j } else { best }))
        .collect()
}

/// Inference batch size used for evaluation and timing.
pub const EVAL_BATCH: usize = 128;

impl<F: Scalar> Classifier for Network<F> {
    fn classify(&self, ds: &Dataset, indices: &[usize]) -> Result<Vec<usize>> {
        let format = self.spec().input_format;
        let chunks: Vec<&[usize]> = indices.chunks(EVAL_BATCH).collect();
        let parts = par_map(chunks.len(), worker_count(), |c| -> Result<Vec<usize>> {
            let x: Tensor<F> = ds.to_tensor(chunks[c], format)?;
            Ok(argmax_rows(&self.predict(&x)?))
        });
        let mut out = Vec::with_capacity(indices.len());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}

/// 11×11 counts: rows are true classes, columns predicted classes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sums(&self) -> [u64; NUM_CLASSES] {
        self.counts.map(|r| r.iter().sum())
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.trace() as f64 / n as f64,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }

    /// Mean count over the off-diagonal cells.
    pub fn mean_off_diagonal(&self) -> f64 {
        (self.total() - self.trace()) as f64 / (NUM_CLASSES * (NUM_CLASSES - 1)) as f64
    }
}

/// Confusion matrices partitioned by SNR.
pub fn confusion_by_snr(predictions: &[usize], labels: &[usize], snrs: &[i8]) -> Result<BTreeMap<i8, ConfusionMatrix>> {
    if predictions.len() != labels.len() || labels.len() != snrs.len() {
        return Err(Error::shape(
            "confusion_by_snr",
            format!("{} predictions, {} labels, {} snrs", predictions.len(), labels.len(), snrs.len()),
        ));
    }
    let mut out: BTreeMap<i8, ConfusionMatrix> = BTreeMap::new();
    for ((&p, &l), &s) in predictions.iter().zip(labels).zip(snrs) {
        if p >= NUM_CLASSES || l >= NUM_CLASSES {
            return Err(Error::InvalidArgument(format!("class id out of range: true {l}, predicted {p}")));
        }
        out.entry(s).or_default().add(l, p);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub overall_accuracy: f64,
    pub accuracy_by_snr: BTreeMap<i8, f64>,
    pub samples_by_snr: BTreeMap<i8, usize>,
    pub confusion_by_snr: BTreeMap<i8, ConfusionMatrix>,
}

impl Evaluation {
    /// All SNRs pooled.
    pub fn pooled_confusion(&self) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::default();
        self.confusion_by_snr.values().for_each(|c| m.merge(c));
        m
    }
}

/// Argmax accuracy of `clf` on every sample of `test`, overall and per SNR.
pub fn evaluate<C: Classifier + ?Sized>(clf: &C, test: &Dataset) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let idx: Vec<usize> = (0..test.len()).collect();
    let preds = clf.classify(test, &idx)?;
    let labels = test.labels(&idx);
    let snrs: Vec<i8> = test.samples.iter().map(|s| s.snr_db).collect();
    let confusion = confusion_by_snr(&preds, &labels, &snrs)?;
    let correct = preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
    Ok(Evaluation {
        overall_accuracy: correct as f64 / test.len() as f64,
        accuracy_by_snr: confusion.iter().map(|(&s, m)| (s, m.accuracy())).collect(),
        samples_by_snr: confusion.iter().map(|(&s, m)| (s, m.total() as usize)).collect(),
        confusion_by_snr: confusion,
    })
}

/// 3-point centred moving average (window shrinks at the ends).
pub fn smooth3(values: &[f64]) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_dataset_with_workers, GenConfig, SNR_LADDER};

    struct Oracle;
    impl Classifier for Oracle {
        fn classify(&self, ds: &Dataset, indices: &[usize]) -> Result<Vec<usize>> {
            Ok(ds.labels(indices))
        }
    }

    struct Constant(usize);
    impl Classifier for Constant {
        fn classify(&self, _: &Dataset, indices: &[usize]) -> Result<Vec<usize>> {
            Ok(vec![self.0; indices.len()])
        }
    }

    fn stratified() -> Dataset {
        let cfg = GenConfig { per_cell: 2, frame_len: 16, snrs: vec![-20, 0, 18], ..GenConfig::default() };
        build_dataset_with_workers(&cfg, 1).unwrap()
    }

    #[test]
    fn oracle_is_perfect_everywhere() {
        let e = evaluate(&Oracle, &stratified()).unwrap();
        assert_eq!(e.overall_accuracy, 1.0);
        assert!(e.accuracy_by_snr.values().all(|&a| a == 1.0));
        for m in e.confusion_by_snr.values() {
            assert_eq!(m.trace(), m.total());
        }
    }

    #[test]
    fn constant_model_scores_chance() {
        let e = evaluate(&Constant(4), &stratified()).unwrap();
        assert!((e.overall_accuracy - 1.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn per_snr_recombines_to_overall() {
        struct Parity;
        impl Classifier for Parity {
            fn classify(&self, ds: &Dataset, idx: &[usize]) -> Result<Vec<usize>> {
                Ok(idx.iter().map(|&i| if i % 3 == 0 { ds.samples[i].mod_type.id() as usize } else { 0 }).collect())
            }
        }
        let e = evaluate(&Parity, &stratified()).unwrap();
        let n: usize = e.samples_by_snr.values().sum();
        let weighted: f64 = e.accuracy_by_snr.iter().map(|(s, a)| a * e.samples_by_snr[s] as f64).sum::<f64>() / n as f64;
        assert!((weighted - e.overall_accuracy).abs() < 1e-15);
    }

    #[test]
    fn confusion_cases() {
        let m = confusion_by_snr(&[1], &[0], &[4]).unwrap();
        assert_eq!(m[&4].counts[0][1], 1);
        assert_eq!(m[&4].total(), 1);
        assert!(confusion_by_snr(&[1, 2], &[0], &[4]).is_err());

        let preds: Vec<usize> = (0..60).map(|i| (i * 7) % 11).collect();
        let labels: Vec<usize> = (0..60).map(|i| i % 11).collect();
        let snrs: Vec<i8> = (0..60).map(|i| SNR_LADDER[i % 4]).collect();
        let split = confusion_by_snr(&preds, &labels, &snrs).unwrap();
        let pooled = confusion_by_snr(&preds, &labels, &[0; 60]).unwrap();
        let mut merged = ConfusionMatrix::default();
        split.values().for_each(|c| merged.merge(c));
        assert_eq!(merged, pooled[&0]);
    }

    #[test]
    fn empty_test_set() {
        let ds = Dataset::new(16, vec![]).unwrap();
        assert!(matches!(evaluate(&Oracle, &ds), Err(Error::EmptyTestSet)));
    }

    #[test]
    fn argmax_ties_and_monotone_rescaling() {
        let p = Tensor::<f64>::from_f64(vec![2, 3], &[0.2, 0.4, 0.4, 0.5, 0.1, 0.4]).unwrap();
        assert_eq!(argmax_rows(&p), vec![1, 0]);
        let sharpened = Tensor::<f64>::from_f64(vec![2, 3], &p.data().iter().map(|v| v.powf(3.0)).collect::<Vec<_>>()).unwrap();
        assert_eq!(argmax_rows(&sharpened), argmax_rows(&p));
    }

    #[test]
    fn smoothing_window() {
        assert_eq!(smooth3(&[0.0, 3.0, 0.0, 3.0]), vec![1.5, 1.0, 2.0, 1.5]);
    }
}
