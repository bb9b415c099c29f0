use std::path::Path;
use std::process::{Command, Output};

fn hybrid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn hybrid")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hybrid(dir.path(), &["sweep-nondominant"]).status.code(), Some(1));
    assert_eq!(hybrid(dir.path(), &["no-such-command"]).status.code(), Some(1));
    let o = hybrid(dir.path(), &["train", "--data", "x.csv", "--loss", "hybrid", "--out", "m"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(hybrid(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = hybrid(dir.path(), &["train", "--data", "missing.csv", "--loss", "log", "--out", "m"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hybrid(dir.path(), &["consistency-check", "--q", "0.5,0.6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = ["synth", "mixed", "--rho", "0.0", "--samples", "1000", "--held-out", "200", "--seed", "4", "--out-dir", "m"];
    assert!(hybrid(d, &synth).status.success());
    let train = [
        "train", "--data", "m/train.csv", "--loss", "log", "--lambda", "0.01", "--standardize", "--out", "model.txt",
    ];
    assert!(hybrid(d, &train).status.success());
    let o = hybrid(d, &["eval", "--model", "model.txt", "--data", "m/test.csv", "--train-data", "m/train.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let acc: f64 = stdout(&o).lines().nth(1).unwrap().parse().unwrap();
    assert!(acc >= 0.9, "accuracy {acc}");

    // the model's fingerprint belongs to the training split
    let o = hybrid(d, &["eval", "--model", "model.txt", "--data", "m/test.csv", "--train-data", "m/test.csv"]);
    assert_eq!(o.status.code(), Some(2));

    let text = std::fs::read_to_string(d.join("model.txt")).unwrap();
    std::fs::write(d.join("future.txt"), text.replacen("hybrid-model 1", "hybrid-model 2", 1)).unwrap();
    let o = hybrid(d, &["eval", "--model", "future.txt", "--data", "m/test.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unsupported"));
}

#[test]
fn chain_model_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(hybrid(d, &["synth", "chunk", "--sentences", "40", "--seed", "2", "--out", "c.conll"]).status.success());
    assert!(d.join("c.conll.vocab").exists());
    let o = hybrid(d, &["train", "--data", "c.conll", "--loss", "hinge", "--lambda", "0.1", "--out", "c.model"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = hybrid(d, &["eval", "--model", "c.model", "--data", "c.conll"]);
    assert!(stdout(&o).starts_with("accuracy,precision,recall,f1\n"));
    let o = hybrid(d, &["dominance", "--model", "c.model", "--data", "c.conll"]);
    let out = stdout(&o);
    assert!(out.starts_with("split,rank,gold_prob,viterbi_prob\n"));
    assert_eq!(out.lines().count(), 41);
}

#[test]
fn consistency_check_reports_threshold_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = hybrid(dir.path(), &["consistency-check", "--q", "0.4,0.35,0.25", "--alpha", "0.8", "--resolution", "60"]);
    let out = stdout(&o);
    assert!(out.contains("dominant,false"));
    let threshold: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("alpha_threshold,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((threshold - 0.75).abs() < 1e-12);
    assert!(out.contains("oracle_aligned,true"));
}

#[test]
fn nondominant_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep-nondominant", "--seed", "5", "--samples", "2000", "--labels", "3,4"];
    let a = stdout(&hybrid(dir.path(), &args));
    let b = stdout(&hybrid(dir.path(), &args));
    assert_eq!(a, b);
    assert!(a.starts_with("k,loss,alpha,train_error,seed\n"));
    assert_eq!(a.lines().count(), 7);
}
