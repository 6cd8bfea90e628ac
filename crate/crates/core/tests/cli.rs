use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pingtsvm")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(p: &Path) -> Vec<String> {
    std::fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

fn blobs(dir: &TempDir, n: usize) -> PathBuf {
    let p = path(dir, "blobs.csv");
    stdout(&run(&["--quiet", "synth", "blobs", "--n", &n.to_string(), "--out", s(&p)]));
    p
}

#[test]
fn synth_writes_requested_rows_deterministically() {
    let dir = TempDir::new().unwrap();
    for generator in ["blobs", "crossplanes", "two-moons"] {
        let a = path(&dir, "a.csv");
        let b = path(&dir, "b.csv");
        stdout(&run(&["--quiet", "--seed", "3", "synth", generator, "--n", "7", "--out", s(&a)]));
        stdout(&run(&["--quiet", "--seed", "3", "synth", generator, "--n", "7", "--out", s(&b)]));
        let rows = data_rows(&a);
        assert_eq!(rows.len(), 14, "{generator}");
        assert_eq!(rows, data_rows(&b), "{generator}");
        assert_eq!(rows.iter().filter(|r| r.ends_with(",+1")).count(), 7);
    }
}

#[test]
fn predict_recovers_training_labels_on_blobs() {
    let dir = TempDir::new().unwrap();
    let data = blobs(&dir, 20);
    let model = path(&dir, "model.txt");
    stdout(&run(&["--quiet", "train", "--train", s(&data), "--model-out", s(&model)]));
    let preds = stdout(&run(&["predict", "--model", s(&model), "--data", s(&data)]));
    let truth: Vec<String> = data_rows(&data).iter().map(|r| r.rsplit(',').next().unwrap().to_string()).collect();
    assert_eq!(preds.lines().collect::<Vec<_>>(), truth);
}

#[test]
fn predict_rejects_wrong_dimension() {
    let dir = TempDir::new().unwrap();
    let data = blobs(&dir, 10);
    let model = path(&dir, "model.txt");
    stdout(&run(&["--quiet", "train", "--train", s(&data), "--model-out", s(&model)]));
    let wide = path(&dir, "wide.csv");
    std::fs::write(&wide, "1,2,3,4\n5,6,7,8\n").unwrap();
    let out = run(&["predict", "--model", s(&model), "--data", s(&wide)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn train_rejects_bad_params_as_usage_error() {
    let dir = TempDir::new().unwrap();
    let data = blobs(&dir, 10);
    let model = path(&dir, "model.txt");
    let out = run(&["train", "--train", s(&data), "--model-out", s(&model), "--tau", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!model.exists());
}

#[test]
fn evaluate_counts_a_small_file() {
    let dir = TempDir::new().unwrap();
    let data = blobs(&dir, 20);
    let model = path(&dir, "model.txt");
    stdout(&run(&["--quiet", "train", "--train", s(&data), "--model-out", s(&model)]));
    let probe = path(&dir, "probe.csv");
    // the blob classes sit at +3 and -3 on the first axis
    std::fs::write(&probe, "3,0,+1\n-3,0,-1\n3,0,-1\n").unwrap();
    let records = stdout(&run(&["--format", "jsonl", "evaluate", "--model", s(&model), "--data", s(&probe)]));
    let records: Vec<serde_json::Value> = records.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let exact = |name: &str| records.iter().find(|r| r["metric"] == name).unwrap()["exact"].as_str().unwrap().to_string();
    assert_eq!(records.len(), 9);
    let got: Vec<String> = ["tp", "fp", "tn", "fn", "accuracy", "precision", "recall", "f1", "specificity"].map(exact).to_vec();
    assert_eq!(got, ["1", "1", "1", "0", "2/3", "1/2", "1", "2/3", "1/2"]);
    let table = stdout(&run(&["evaluate", "--model", s(&model), "--data", s(&probe)]));
    assert!(table.contains("accuracy") && table.contains("2/3"), "{table}");
}

#[test]
fn gridsearch_emits_one_row_per_tuple() {
    let dir = TempDir::new().unwrap();
    let data = blobs(&dir, 10);
    let single = stdout(&run(&["--format", "csv", "gridsearch", "--train", s(&data), "--c-values", "1", "--tau-values", "0.5"]));
    let lines: Vec<&str> = single.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1,0,1,1,n/a,0.5,0.5,"), "{single}");
    assert!(single.lines().last().unwrap().starts_with("# best: --kernel linear --c1 1"));
    let full = stdout(&run(&["--format", "jsonl", "gridsearch", "--train", s(&data)]));
    let lines: Vec<&str> = full.lines().collect();
    assert_eq!(lines.len(), 34);
    assert!(lines[33].starts_with("{\"best\":"));
}

#[test]
fn bench_validates_scenario_and_honours_seeds() {
    let out = run(&["bench", "--scenario", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let csv = stdout(&run(&["--format", "csv", "bench", "--scenario", "tau-sweep", "--seeds", "1,2"]));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    // the degenerate tau = 1 cell fails once per seed
    assert!(rows[3].starts_with("crossplanes,1,") && rows[3].ends_with(",2"), "{csv}");
}

#[test]
fn help_exits_cleanly() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("gridsearch"));
}
