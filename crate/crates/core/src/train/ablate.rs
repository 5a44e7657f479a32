//! One-axis-at-a-time SCRNN structure sweeps.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{build_scrnn, ScrnnVariant};
use crate::nn::RnnKind;
use crate::synth::Dataset;
use crate::train::config::TrainConfig;
use crate::train::report::{run_experiment, split_hash, RunReport};
use crate::train::trainer::EpochRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    KernelSize,
    ConvDepth,
    KernelCount,
    RnnType,
    RnnDepth,
}

impl AblationAxis {
    pub const ALL: [AblationAxis; 5] =
        [AblationAxis::KernelSize, AblationAxis::ConvDepth, AblationAxis::KernelCount, AblationAxis::RnnType, AblationAxis::RnnDepth];

    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::KernelSize => "kernel_size",
            AblationAxis::ConvDepth => "conv_depth",
            AblationAxis::KernelCount => "kernel_count",
            AblationAxis::RnnType => "rnn_type",
            AblationAxis::RnnDepth => "rnn_depth",
        }
    }

    /// `base` with this axis swept over its grid, everything else fixed.
    pub fn variants(self, base: ScrnnVariant) -> Vec<ScrnnVariant> {
        match self {
            AblationAxis::KernelSize => [3, 5, 7].map(|k| ScrnnVariant { kernel_size: k, ..base }).to_vec(),
            AblationAxis::ConvDepth => [1, 2, 3].map(|d| ScrnnVariant { conv_depth: d, ..base }).to_vec(),
            AblationAxis::KernelCount => [64, 128, 256].map(|n| ScrnnVariant { kernel_count: n, ..base }).to_vec(),
            AblationAxis::RnnType => {
                [RnnKind::Lstm, RnnKind::Gru, RnnKind::Simple].map(|r| ScrnnVariant { rnn_kind: r, ..base }).to_vec()
            }
            AblationAxis::RnnDepth => [1, 2, 3].map(|d| ScrnnVariant { rnn_depth: d, ..base }).to_vec(),
        }
    }
}

impl FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ablation axis {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub axis: AblationAxis,
    pub variant: ScrnnVariant,
    pub label: String,
    /// Hash of the train/test index sets this run used.
    pub split_hash: u64,
    pub report: RunReport,
}

/// Trains one model per distinct variant on a shared split. A variant that
/// appears on several axes (the base) is trained once and reported on each.
pub fn ablate(
    axes: &[AblationAxis],
    base: ScrnnVariant,
    ds: &Dataset,
    train_fraction: f64,
    cfg: &TrainConfig,
    mut on_run: impl FnMut(&AblationRun),
    mut on_epoch: impl FnMut(&ScrnnVariant, &EpochRecord),
) -> Result<Vec<AblationRun>> {
    base.validate()?;
    let mut done: HashMap<ScrnnVariant, (u64, RunReport)> = HashMap::new();
    let mut runs = Vec::new();
    for &axis in axes {
        for v in axis.variants(base) {
            if let Entry::Vacant(slot) = done.entry(v) {
                let spec = build_scrnn(v)?.with_input_len(ds.frame_len)?;
                let config = serde_json::json!({ "variant": v, "train": cfg, "train_fraction": train_fraction });
                let exp = run_experiment(&spec, ds, train_fraction, cfg, config, |r| on_epoch(&v, r))?;
                slot.insert((split_hash(&exp.train_indices, &exp.test_indices), exp.report));
            }
            let (hash, report) = done[&v].clone();
            let run = AblationRun { axis, variant: v, label: v.label(), split_hash: hash, report };
            on_run(&run);
            runs.push(run);
        }
    }
    Ok(runs)
}

/// One CSV line per run: axis, variant label, parameters, best epoch,
/// accuracy, median epoch seconds, inference µs/sample, split hash.
pub fn ablation_csv(runs: &[AblationRun]) -> String {
    let mut s = String::from("axis,variant,params,best_epoch,overall_accuracy,seconds_per_epoch,prediction_us_per_sample,split_hash\n");
    for r in runs {
        s.push_str(&format!(
            "{},{},{},{},{:.8e},{:.8e},{:.8e},{:016x}\n",
            r.axis.name(),
            r.label,
            r.report.param_count,
            r.report.best_epoch,
            r.report.evaluation.overall_accuracy,
            r.report.timing.train_seconds_per_epoch,
            r.report.timing.prediction_us_per_sample,
            r.split_hash
        ));
    }
    s
}
