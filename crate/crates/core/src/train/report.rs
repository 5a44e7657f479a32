//! Train-and-evaluate runs and their on-disk reports.
//!
//! Run directory layout:
//!
//! * `history.csv`: `epoch,train_loss,val_loss,seconds`, floats with 9
//!   significant digits.
//! * `accuracy_by_snr.csv`: `snr_db,accuracy,samples`.
//! * `confusion_<snr>.csv`: header `true\predicted,<11 class names>`, then
//!   one row per true class: name followed by 11 counts.
//! * `timing.json`: [`Timing`].
//! * `config.json`: the effective configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Network};
use crate::rng::SeededRng;
use crate::synth::{split_indices, Dataset, ModType, NUM_CLASSES};
use crate::train::config::TrainConfig;
use crate::train::eval::{evaluate, ConfusionMatrix, Evaluation};
use crate::train::timing::{median, prediction_timing, Timing};
use crate::train::trainer::{train_with_progress, EpochRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub param_count: usize,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub evaluation: Evaluation,
    pub timing: Timing,
    pub config: serde_json::Value,
}

pub struct Experiment {
    pub report: RunReport,
    pub network: Network<f32>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// FNV-1a over the two index lists; equal hashes mean equal splits.
pub fn split_hash(train: &[usize], test: &[usize]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for (tag, part) in [(0u64, train), (1u64, test)] {
        for v in std::iter::once(tag.wrapping_sub(1)).chain(part.iter().map(|&i| i as u64)) {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    h
}

/// The stratified train/test split used by every run with this seed.
pub fn train_test_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    split_indices(ds, train_fraction, &mut SeededRng::derived(seed, &[0]))
}

/// Splits `ds`, trains on the training part, evaluates on the test part and
/// times inference.
pub fn run_experiment(
    spec: &ModelSpec,
    ds: &Dataset,
    train_fraction: f64,
    cfg: &TrainConfig,
    config: serde_json::Value,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<Experiment> {
    let (tr, te) = train_test_split(ds, train_fraction, cfg.seed)?;
    let train_set = ds.subset(&tr);
    let test_set = ds.subset(&te);
    let outcome = train_with_progress(spec, &train_set, cfg, on_epoch)?;
    let evaluation = evaluate(&outcome.network, &test_set)?;
    let secs: Vec<f64> = outcome.history.iter().map(|r| r.seconds).collect();
    let pred = prediction_timing(&outcome.network, &test_set, 5)?;
    let timing = Timing {
        train_seconds_per_epoch: median(&secs),
        total_train_seconds: secs.iter().sum(),
        prediction_us_per_sample: median(&pred),
        epoch_seconds: secs,
        prediction_repeats_us: pred,
    };
    let report = RunReport {
        model: spec.name.clone(),
        param_count: outcome.network.param_count(),
        history: outcome.history,
        best_epoch: outcome.best_epoch,
        evaluation,
        timing,
        config,
    };
    Ok(Experiment { report, network: outcome.network, train_indices: tr, test_indices: te })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,seconds\n");
    for r in history {
        writeln!(s, "{},{:.8e},{:.8e},{:.8e}", r.epoch, r.train_loss, r.val_loss, r.seconds).unwrap();
    }
    s
}

pub fn parse_history_csv(text: &str) -> Result<Vec<EpochRecord>> {
    let bad = |line: usize, detail: &str| Error::Malformed { offset: line as u64, detail: format!("history.csv line {line}: {detail}") };
    let mut lines = text.lines();
    if lines.next() != Some("epoch,train_loss,val_loss,seconds") {
        return Err(bad(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 2, "expected 4 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
            Ok(EpochRecord {
                epoch: f[0].parse().map_err(|_| bad(i + 2, "bad epoch"))?,
                train_loss: num(f[1])?,
                val_loss: num(f[2])?,
                seconds: num(f[3])?,
            })
        })
        .collect()
}

pub fn accuracy_csv(eval: &Evaluation) -> String {
    let mut s = String::from("snr_db,accuracy,samples\n");
    for (snr, acc) in &eval.accuracy_by_snr {
        writeln!(s, "{snr},{acc:.8e},{}", eval.samples_by_snr[snr]).unwrap();
    }
    s
}

pub fn confusion_csv(m: &ConfusionMatrix) -> String {
    let mut s = String::from("true\\predicted");
    for c in ModType::ALL {
        write!(s, ",{}", c.name()).unwrap();
    }
    s.push('\n');
    for (k, row) in m.counts.iter().enumerate() {
        s.push_str(ModType::ALL[k].name());
        for v in row {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn parse_confusion_csv(text: &str) -> Result<ConfusionMatrix> {
    let bad = |detail: String| Error::Malformed { offset: 0, detail: format!("confusion csv: {detail}") };
    let mut lines = text.lines();
    lines.next().ok_or_else(|| bad("empty".into()))?;
    let mut m = ConfusionMatrix::default();
    for k in 0..NUM_CLASSES {
        let line = lines.next().ok_or_else(|| bad(format!("missing row {k}")))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != NUM_CLASSES + 1 || f[0] != ModType::ALL[k].name() {
            return Err(bad(format!("row {k} malformed")));
        }
        for j in 0..NUM_CLASSES {
            m.counts[k][j] = f[j + 1].parse().map_err(|_| bad(format!("row {k} column {j}")))?;
        }
    }
    Ok(m)
}

/// Writes the evaluation files (`accuracy_by_snr.csv`, `confusion_<snr>.csv`).
pub fn export_evaluation(eval: &Evaluation, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "accuracy_by_snr.csv", &accuracy_csv(eval))?;
    for (snr, m) in &eval.confusion_by_snr {
        write(dir, &format!("confusion_{snr}.csv"), &confusion_csv(m))?;
    }
    Ok(())
}

/// Writes every report file into `dir`, creating it if needed.
pub fn export_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    export_evaluation(&report.evaluation, dir)?;
    write(dir, "history.csv", &history_csv(&report.history))?;
    write(dir, "timing.json", &json(&report.timing))?;
    write(dir, "config.json", &json(&report.config))
}

/// Accuracy per SNR read back from `accuracy_by_snr.csv`.
pub fn parse_accuracy_csv(text: &str) -> Result<BTreeMap<i8, (f64, usize)>> {
    let bad = |line: usize| Error::Malformed { offset: line as u64, detail: format!("accuracy_by_snr.csv line {line}") };
    let mut lines = text.lines();
    if lines.next() != Some("snr_db,accuracy,samples") {
        return Err(bad(1));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(bad(i + 2));
            }
            Ok((
                f[0].parse().map_err(|_| bad(i + 2))?,
                (f[1].parse().map_err(|_| bad(i + 2))?, f[2].parse().map_err(|_| bad(i + 2))?),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::eval::confusion_by_snr;

    #[test]
    fn history_round_trips_exactly_at_nine_digits() {
        let h = vec![
            EpochRecord { epoch: 1, train_loss: 2.3978952728, val_loss: 2.25, seconds: 0.125 },
            EpochRecord { epoch: 2, train_loss: 1.0 / 3.0, val_loss: 1e-9, seconds: 12.5 },
        ];
        let back = parse_history_csv(&history_csv(&h)).unwrap();
        for (a, b) in h.iter().zip(&back) {
            assert_eq!(a.epoch, b.epoch);
            assert_eq!(format!("{:.8e}", a.train_loss), format!("{:.8e}", b.train_loss));
            assert_eq!(back, parse_history_csv(&history_csv(&back)).unwrap());
        }
    }

    #[test]
    fn confusion_csv_round_trip_and_row_sums() {
        let preds = [0, 1, 1, 3, 4, 4];
        let labels = [0, 1, 2, 3, 3, 4];
        let m = confusion_by_snr(&preds, &labels, &[2; 6]).unwrap().remove(&2).unwrap();
        let back = parse_confusion_csv(&confusion_csv(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.row_sums()[3], 2);
    }

    #[test]
    fn split_hash_distinguishes_splits() {
        assert_eq!(split_hash(&[1, 2], &[3]), split_hash(&[1, 2], &[3]));
        assert_ne!(split_hash(&[1, 2], &[3]), split_hash(&[1], &[2, 3]));
    }
}
