//! Training, evaluation, timing and ablation runs.

pub mod ablate;
pub mod config;
pub mod eval;
pub mod report;
pub mod timing;
pub mod trainer;

pub use ablate::{ablate, ablation_csv, AblationAxis, AblationRun};
pub use config::{Precision, TrainConfig};
pub use eval::{argmax_rows, confusion_by_snr, evaluate, smooth3, Classifier, ConfusionMatrix, Evaluation};
pub use report::{
    export_evaluation, export_report, history_csv, parse_accuracy_csv, parse_confusion_csv, parse_history_csv,
    run_experiment, split_hash, train_test_split, Experiment, RunReport,
};
pub use timing::{benchmark_timing, median, prediction_timing, Timing};
pub use trainer::{train, train_with_progress, validation_loss, EpochRecord, TrainOutcome};
