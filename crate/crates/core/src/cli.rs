//! The `amc` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or file
//! contract error, 3 numeric failure (non-finite values, failed gradient
//! check). Progress goes to standard error; results go to files under `--out`.
//!
//! A run config is a JSON object; every key is optional:
//!
//! ```json
//! {
//!   "seed": 42,
//!   "arch": "scrnn",
//!   "dataset": "ds.amcd",
//!   "train_fraction": 0.8,
//!   "gen": { "samples_per_symbol": 8, "frame_len": 128, "per_cell": 1000 },
//!   "train": { "batch_size": 128, "lr": 0.001, "max_epochs": 30 },
//!   "variant": { "conv_depth": 2, "kernel_size": 5, "kernel_count": 128 }
//! }
//! ```
//!
//! The top-level `seed` seeds both generation and training and replaces any
//! `gen.seed` or `train.seed`. When neither the file nor `--seed` gives one, a
//! seed is drawn from the clock and written to the run's `config.json`.
//! Command-line flags override file values, which override defaults.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::models::{check_model_gradients, load_weights, save_weights, Arch, ScrnnHead, ScrnnVariant};
use crate::nn::{GradCheckConfig, RnnKind};
use crate::rng::splitmix64;
use crate::synth::{build_dataset, read_dataset, write_dataset, Dataset, GenConfig, ModType};
use crate::train::{
    ablate, ablation_csv, benchmark_timing, evaluate, export_evaluation, export_report, run_experiment,
    train_test_split, AblationAxis, Precision, TrainConfig,
};

/// Gradient checks pass below this maximum relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Input length used by `gradcheck --toy`.
pub const TOY_INPUT_LEN: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub seed: Option<u64>,
    pub arch: Arch,
    /// Dataset file; when absent the dataset is generated from `gen`.
    pub dataset: Option<PathBuf>,
    /// Stratified share of the dataset used for training (the rest is test).
    pub train_fraction: f64,
    pub gen: GenConfig,
    pub train: TrainConfig,
    pub variant: ScrnnVariant,
}

impl Default for RunConfigFile {
    fn default() -> Self {
        Self {
            seed: None,
            arch: Arch::Scrnn,
            dataset: None,
            train_fraction: 0.8,
            gen: GenConfig::default(),
            train: TrainConfig::default(),
            variant: ScrnnVariant::default(),
        }
    }
}

impl RunConfigFile {
    /// Checks every section; errors carry the full key path.
    pub fn validate(&self) -> crate::Result<()> {
        self.gen.validate().map_err(|e| match e {
            Error::Config { key, detail } => Error::Config { key: format!("gen.{key}"), detail },
            other => other,
        })?;
        self.train.validate()?;
        self.variant.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config {
                key: "train_fraction".into(),
                detail: format!("must be in (0, 1), got {}", self.train_fraction),
            });
        }
        Ok(())
    }

    /// Fixes the seed (drawing one if unset) and copies it into the sections.
    pub fn resolve_seed(&mut self) -> u64 {
        let seed = *self.seed.get_or_insert_with(clock_seed);
        self.gen.seed = seed;
        self.train.seed = seed;
        seed
    }
}

fn clock_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    splitmix64(nanos ^ std::process::id() as u64)
}

/// Parses config text. Empty or whitespace-only text gives the defaults.
pub fn parse_config_str(text: &str) -> crate::Result<RunConfigFile> {
    if text.trim().is_empty() {
        return Ok(RunConfigFile::default());
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        let key = match msg.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
            Some(field) if path == "." => field.to_string(),
            _ => path,
        };
        Error::Config { key, detail: msg }
    })
}

/// Reads and validates a config file; `None` gives the defaults.
pub fn parse_config(path: Option<&Path>) -> crate::Result<RunConfigFile> {
    let cfg = match path {
        Some(p) => parse_config_str(&std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.into(), source: e })?)?,
        None => RunConfigFile::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Parser, Debug)]
#[command(name = "amc", version, about = "Modulation classification: dataset synthesis, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled IQ dataset file.
    Gen(GenCmd),
    /// Train a model and write a run directory.
    Train(TrainCmd),
    /// Re-evaluate a run directory on its test split.
    Eval(EvalCmd),
    /// Train SCRNN variants one structural axis at a time.
    Ablate(AblateCmd),
    /// Compare analytic and finite-difference gradients of a model.
    Gradcheck(GradcheckCmd),
    /// Time training epochs and inference.
    Bench(BenchCmd),
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// JSON run config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct GenFlags {
    #[arg(long)]
    per_cell: Option<usize>,
    #[arg(long)]
    frame_len: Option<usize>,
    /// Comma-separated modulation names, e.g. bpsk,qpsk.
    #[arg(long, value_delimiter = ',')]
    mods: Option<Vec<ModType>>,
    /// Comma-separated SNRs in dB, e.g. -10,0,10.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snrs: Option<Vec<i8>>,
}

#[derive(Args, Debug, Default)]
struct TrainFlags {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[arg(long, value_parser = parse_snake::<Precision>)]
    precision: Option<Precision>,
}

#[derive(Args, Debug, Default)]
struct ModelFlags {
    #[arg(long)]
    arch: Option<Arch>,
    #[arg(long)]
    conv_depth: Option<usize>,
    #[arg(long)]
    kernel_size: Option<usize>,
    #[arg(long)]
    kernel_count: Option<usize>,
    /// lstm, gru or simple.
    #[arg(long, value_parser = parse_snake::<RnnKind>)]
    rnn_type: Option<RnnKind>,
    #[arg(long)]
    rnn_depth: Option<usize>,
    /// flatten or last_step.
    #[arg(long, value_parser = parse_snake::<ScrnnHead>)]
    head: Option<ScrnnHead>,
}

#[derive(Args, Debug)]
struct GenCmd {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    gen: GenFlags,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainCmd {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    model: ModelFlags,
    /// Run directory to create.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalCmd {
    /// Run directory written by `train`.
    #[arg(long)]
    run: PathBuf,
    /// Dataset file replacing the one recorded in the run config.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Directory for accuracy_by_snr.csv and the confusion matrices.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AblateCmd {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    model: ModelFlags,
    /// Comma-separated axes (kernel_size, conv_depth, kernel_count, rnn_type, rnn_depth); default all.
    #[arg(long, value_delimiter = ',')]
    axes: Option<Vec<AblationAxis>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GradcheckCmd {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use a 12-step input instead of the full frame length.
    #[arg(long)]
    toy: bool,
    #[arg(long)]
    input_len: Option<usize>,
    /// Coordinates sampled per parameter tensor.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Debug)]
struct BenchCmd {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    model: ModelFlags,
    /// Timed epochs after one warm-up epoch.
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_snake<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase())).map_err(|e| e.to_string())
}

/// A failed command: the stage that failed and why.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            e if e.is_numeric() => 3,
            Error::Config { .. } | Error::InvalidArgument(_) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for crate::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

fn effective_config(
    config: &ConfigArgs,
    gen: &GenFlags,
    train: Option<&TrainFlags>,
    model: Option<&ModelFlags>,
) -> crate::Result<RunConfigFile> {
    let mut c = match &config.config {
        Some(p) => parse_config_str(&std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?)?,
        None => RunConfigFile::default(),
    };
    if config.seed.is_some() {
        c.seed = config.seed;
    }
    let g = &mut c.gen;
    g.per_cell = gen.per_cell.unwrap_or(g.per_cell);
    g.frame_len = gen.frame_len.unwrap_or(g.frame_len);
    if let Some(m) = &gen.mods {
        g.mods = m.clone();
    }
    if let Some(s) = &gen.snrs {
        g.snrs = s.clone();
    }
    if let Some(t) = train {
        if t.dataset.is_some() {
            c.dataset = t.dataset.clone();
        }
        c.train_fraction = t.train_fraction.unwrap_or(c.train_fraction);
        let tc = &mut c.train;
        tc.batch_size = t.batch_size.unwrap_or(tc.batch_size);
        tc.lr = t.lr.unwrap_or(tc.lr);
        tc.max_epochs = t.max_epochs.unwrap_or(tc.max_epochs);
        tc.early_stop_patience = t.patience.unwrap_or(tc.early_stop_patience);
        tc.val_fraction = t.val_fraction.unwrap_or(tc.val_fraction);
        tc.precision = t.precision.unwrap_or(tc.precision);
    }
    if let Some(m) = model {
        apply_model_flags(&mut c.arch, &mut c.variant, m);
    }
    c.resolve_seed();
    c.validate()?;
    Ok(c)
}

fn apply_model_flags(arch: &mut Arch, v: &mut ScrnnVariant, m: &ModelFlags) {
    *arch = m.arch.unwrap_or(*arch);
    v.conv_depth = m.conv_depth.unwrap_or(v.conv_depth);
    v.kernel_size = m.kernel_size.unwrap_or(v.kernel_size);
    v.kernel_count = m.kernel_count.unwrap_or(v.kernel_count);
    v.rnn_kind = m.rnn_type.unwrap_or(v.rnn_kind);
    v.rnn_depth = m.rnn_depth.unwrap_or(v.rnn_depth);
    v.head = m.head.unwrap_or(v.head);
}

fn load_or_generate(c: &RunConfigFile) -> crate::Result<Dataset> {
    match &c.dataset {
        Some(p) => {
            eprintln!("reading dataset {}", p.display());
            read_dataset(p)
        }
        None => {
            eprintln!("generating {} samples (seed {})", c.gen.total_samples(), c.gen.seed);
            build_dataset(&c.gen)
        }
    }
}

fn create_dir(dir: &Path) -> crate::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> crate::Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("config types serialize");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn cmd_gen(a: &GenCmd) -> Result<(), Failure> {
    let c = effective_config(&a.config, &a.gen, None, None).stage("config")?;
    eprintln!("generating {} samples (seed {})", c.gen.total_samples(), c.gen.seed);
    let ds = build_dataset(&c.gen).stage("generation")?;
    write_dataset(&ds, &a.out).stage("writing dataset")?;
    eprintln!("wrote {} samples to {}", ds.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: &TrainCmd) -> Result<(), Failure> {
    let c = effective_config(&a.config, &a.gen, Some(&a.train), Some(&a.model)).stage("config")?;
    let ds = load_or_generate(&c).stage("dataset")?;
    let spec = c.arch.build(c.variant).and_then(|s| s.with_input_len(ds.frame_len)).stage("model")?;
    create_dir(&a.out).stage("output directory")?;
    let config = serde_json::to_value(&c).expect("config serializes");
    eprintln!("training {} ({} samples, seed {})", spec.name, ds.len(), c.train.seed);
    let exp = run_experiment(&spec, &ds, c.train_fraction, &c.train, config, |r| {
        eprintln!("epoch {:3}  train {:.4}  val {:.4}  {:.1}s", r.epoch, r.train_loss, r.val_loss, r.seconds)
    })
    .stage("training")?;
    export_report(&exp.report, &a.out).stage("writing report")?;
    save_weights(&exp.network, a.out.join("weights.amcw")).stage("writing weights")?;
    eprintln!(
        "best epoch {}, test accuracy {:.4}, run written to {}",
        exp.report.best_epoch,
        exp.report.evaluation.overall_accuracy,
        a.out.display()
    );
    Ok(())
}

fn cmd_eval(a: &EvalCmd) -> Result<(), Failure> {
    let mut c = parse_config(Some(&a.run.join("config.json"))).stage("run config")?;
    if a.dataset.is_some() {
        c.dataset = a.dataset.clone();
    }
    c.resolve_seed();
    let net = load_weights(a.run.join("weights.amcw")).stage("weights")?;
    let ds = load_or_generate(&c).stage("dataset")?;
    let (_, test) = train_test_split(&ds, c.train_fraction, c.train.seed).stage("split")?;
    let eval = evaluate(&net, &ds.subset(&test)).stage("evaluation")?;
    export_evaluation(&eval, &a.out).stage("writing evaluation")?;
    eprintln!("test accuracy {:.4} over {} samples", eval.overall_accuracy, test.len());
    Ok(())
}

fn cmd_ablate(a: &AblateCmd) -> Result<(), Failure> {
    let c = effective_config(&a.config, &a.gen, Some(&a.train), Some(&a.model)).stage("config")?;
    let ds = load_or_generate(&c).stage("dataset")?;
    let axes = a.axes.clone().unwrap_or_else(|| AblationAxis::ALL.to_vec());
    create_dir(&a.out).stage("output directory")?;
    write_json(&a.out.join("config.json"), &c).stage("writing config")?;
    let mut written = BTreeSet::new();
    let mut io_error = None;
    let runs = ablate(
        &axes,
        c.variant,
        &ds,
        c.train_fraction,
        &c.train,
        |run| {
            eprintln!("{} {}: accuracy {:.4}", run.axis.name(), run.label, run.report.evaluation.overall_accuracy);
            if written.insert(run.label.clone()) && io_error.is_none() {
                io_error = export_report(&run.report, a.out.join(&run.label)).err();
            }
        },
        |v, r| eprintln!("  {} epoch {:3}  train {:.4}  val {:.4}", v.label(), r.epoch, r.train_loss, r.val_loss),
    )
    .stage("ablation")?;
    io_error.map_or(Ok(()), Err).stage("writing report")?;
    let path = a.out.join("ablation.csv");
    std::fs::write(&path, ablation_csv(&runs))
        .map_err(|e| Error::Io { path, source: e })
        .stage("writing summary")?;
    Ok(())
}

fn cmd_gradcheck(a: &GradcheckCmd) -> Result<(), Failure> {
    let (mut arch, mut variant) = (Arch::Scrnn, ScrnnVariant::default());
    apply_model_flags(&mut arch, &mut variant, &a.model);
    let spec = arch.build(variant).stage("model")?;
    let len = a.input_len.unwrap_or(if a.toy { TOY_INPUT_LEN } else { spec.input_len });
    let spec = spec.with_input_len(len).stage("model")?;
    let cfg = GradCheckConfig { samples_per_tensor: a.samples, ..Default::default() };
    eprintln!("checking {} ({} parameters, input length {len})", spec.name, spec.count_params().unwrap_or(0));
    let rep = check_model_gradients(&spec, a.seed, &cfg).stage("gradient check")?;
    println!(
        "max relative error {:.3e} over {} coordinates ({} skipped at activation kinks)",
        rep.max_rel_error, rep.coordinates_checked, rep.kinks_skipped
    );
    if rep.max_rel_error < GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(Failure {
            stage: "gradient check",
            error: Error::NonFinite {
                stage: format!("gradient agreement: {:.3e} >= {GRADCHECK_TOLERANCE:e}", rep.max_rel_error),
            },
        })
    }
}

fn cmd_bench(a: &BenchCmd) -> Result<(), Failure> {
    let c = effective_config(&a.config, &a.gen, Some(&a.train), Some(&a.model)).stage("config")?;
    let ds = load_or_generate(&c).stage("dataset")?;
    let spec = c.arch.build(c.variant).and_then(|s| s.with_input_len(ds.frame_len)).stage("model")?;
    eprintln!("timing {} over {} epochs on {} samples", spec.name, a.epochs, ds.len());
    let timing = benchmark_timing(&spec, &ds, &c.train, a.epochs).stage("benchmark")?;
    create_dir(&a.out).stage("output directory")?;
    write_json(&a.out.join("config.json"), &c).stage("writing config")?;
    write_json(&a.out.join("timing.json"), &timing).stage("writing timing")?;
    eprintln!(
        "{:.3} s/epoch, {:.1} us/sample inference",
        timing.train_seconds_per_epoch, timing.prediction_us_per_sample
    );
    Ok(())
}

/// Parses `argv` (program name first) and runs one command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (name, result) = match &cli.command {
        Command::Gen(a) => ("gen", cmd_gen(a)),
        Command::Train(a) => ("train", cmd_train(a)),
        Command::Eval(a) => ("eval", cmd_eval(a)),
        Command::Ablate(a) => ("ablate", cmd_ablate(a)),
        Command::Gradcheck(a) => ("gradcheck", cmd_gradcheck(a)),
        Command::Bench(a) => ("bench", cmd_bench(a)),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("amc {name}: {f}");
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train_cmd(args: &[&str]) -> TrainCmd {
        let argv = ["amc", "train", "--out", "x"].iter().chain(args).copied();
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Train(t) => t,
            _ => unreachable!(),
        }
    }

    #[test]
    fn empty_file_gives_documented_defaults() {
        let c = parse_config_str("  \n").unwrap();
        assert_eq!(c.train.batch_size, 128);
        assert_eq!(c.train.lr, 1e-3);
        assert_eq!(c.gen.samples_per_symbol, 8);
        assert_eq!(parse_config_str("{}").unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_named_with_their_path() {
        let e = parse_config_str(r#"{"train": {"batchsize": 64}}"#).unwrap_err();
        match e {
            Error::Config { key, .. } => assert_eq!(key, "train.batchsize"),
            other => panic!("{other}"),
        }
        let e = parse_config_str(r#"{"sed": 1}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "sed"), "{e}");
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let e = parse_config_str(r#"{"gen": {"frame_len": "long"}}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "gen.frame_len"), "{e}");
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut c = parse_config_str(r#"{"train": {"lr": -1.0}}"#).unwrap();
        c.resolve_seed();
        assert!(matches!(c.validate(), Err(Error::Config { ref key, .. }) if key == "train.lr"));
        let c = parse_config_str(r#"{"gen": {"channel": {"scale_range": [2.0, 1.0]}}}"#).unwrap();
        let e = c.validate().unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key.starts_with("gen.channel.")), "{e}");
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 9, "train": {"lr": 0.001, "batch_size": 32}}"#).unwrap();
        let p = path.to_str().unwrap();
        let t = train_cmd(&["--config", p, "--lr", "0.01"]);
        let c = effective_config(&t.config, &t.gen, Some(&t.train), Some(&t.model)).unwrap();
        assert_eq!(c.train.lr, 0.01);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!((c.seed, c.gen.seed, c.train.seed), (Some(9), 9, 9));
        let t = train_cmd(&["--config", p, "--seed", "4", "--rnn-type", "gru", "--snrs", "-10,0"]);
        let c = effective_config(&t.config, &t.gen, Some(&t.train), Some(&t.model)).unwrap();
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.variant.rnn_kind, RnnKind::Gru);
        assert_eq!(c.gen.snrs, vec![-10, 0]);
    }

    #[test]
    fn missing_seed_is_generated_and_recorded() {
        let t = train_cmd(&[]);
        let c = effective_config(&t.config, &t.gen, Some(&t.train), Some(&t.model)).unwrap();
        let seed = c.seed.expect("seed recorded");
        assert_eq!(c.train.seed, seed);
        let back = parse_config_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.seed, Some(seed));
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run(["amc"]), 1);
        assert_eq!(run(["amc", "train", "--out", "x", "--bogus"]), 1);
        assert_eq!(run(["amc", "gen"]), 1);
        assert_eq!(run(["amc", "--help"]), 0);
    }
}
