use std::path::Path;
use std::process::{Command, Output};

fn amc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amc")).args(args).env("AMC_THREADS", "1").output().expect("spawn amc")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"gen": {"per_cell": 3, "mods": ["BPSK", "WBFM"], "snrs": [-4, 6]}}"#).unwrap();
    let (a, b) = (dir.path().join("a.amcd"), dir.path().join("b.amcd"));
    for out in [&a, &b] {
        let o = amc(&["gen", "--config", s(&cfg), "--out", s(out), "--seed", "42"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(&bytes[..4], b"AMCD");
    let ds = amc_core::synth::read_dataset(&a).unwrap();
    assert_eq!(ds.len(), 12);
}

#[test]
fn train_writes_a_self_describing_run_that_eval_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds.amcd");
    let o = amc(&["gen", "--out", s(&ds), "--seed", "3", "--per-cell", "10", "--mods", "bpsk,qpsk,cpfsk", "--snrs", "0,10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let run = dir.path().join("run1");
    let o = amc(&[
        "train", "--arch", "scrnn", "--dataset", s(&ds), "--out", s(&run), "--seed", "5", "--max-epochs", "2",
        "--kernel-count", "64", "--batch-size", "16",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.json", "weights.amcw", "history.csv", "accuracy_by_snr.csv", "confusion_0.csv", "confusion_10.csv", "timing.json"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let history = std::fs::read_to_string(run.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    let config: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["seed"], 5);
    assert_eq!(config["train"]["max_epochs"], 2);

    let again = dir.path().join("again");
    let o = amc(&["eval", "--run", s(&run), "--out", s(&again)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["accuracy_by_snr.csv", "confusion_0.csv", "confusion_10.csv"] {
        assert_eq!(std::fs::read(run.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f} differs");
    }
    let entries: Vec<_> = std::fs::read_dir(&again).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries.len(), 3, "eval wrote {entries:?}");
}

#[test]
fn toy_gradcheck_passes() {
    let o = amc(&["gradcheck", "--arch", "scrnn", "--toy"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{out}{}", String::from_utf8_lossy(&o.stderr));
    let err: f64 = out.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!(err < 1e-4, "{out}");
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"train": {"batchsize": 64}}"#).unwrap();
    let o = amc(&["gen", "--config", s(&bad), "--out", s(&dir.path().join("x.amcd"))]);
    assert_eq!(o.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("config") && msg.contains("train.batchsize"), "{msg}");

    let junk = dir.path().join("junk.amcd");
    std::fs::write(&junk, b"NOPE\x01\x00").unwrap();
    let o = amc(&["train", "--dataset", s(&junk), "--out", s(&dir.path().join("r"))]);
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("dataset") && msg.contains("bad magic"), "{msg}");
    assert!(!dir.path().join("r").exists());

    assert_eq!(amc(&["train", "--out", "r", "--unknown-flag"]).status.code(), Some(1));
    assert_eq!(amc(&["frobnicate"]).status.code(), Some(1));
}
