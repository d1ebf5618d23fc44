//! End-to-end exercises of the command-line binary: synth -> train -> score
//! -> eval -> bench, plus exit-code and config-file contracts.

use std::path::Path;
use std::process::{Command, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_varade"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn varade");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn synth(dir: &Path, name: &str, cycles: u32, anomalies: u32, seed: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    run_ok(bin().args([
        "synth",
        "--out",
        path.to_str().unwrap(),
        "--cycles",
        &cycles.to_string(),
        "--rate",
        "40",
        "--anomalies",
        &anomalies.to_string(),
        "--seed",
        &seed.to_string(),
    ]));
    path
}

#[test]
fn full_pipeline_varade() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = synth(dir.path(), "train.csv", 2, 0, 1);
    let test_csv = synth(dir.path(), "test.csv", 1, 5, 2);
    let ckpt = dir.path().join("model.ckpt");
    let stdout = run_ok(bin().args([
        "train",
        "--data",
        train_csv.to_str().unwrap(),
        "--out",
        ckpt.to_str().unwrap(),
        "--model",
        "varade",
        "--window",
        "32",
        "--base-maps",
        "4",
        "--steps",
        "40",
        "--batch",
        "4",
        "--lr",
        "1e-3",
    ]));
    assert!(stdout.contains("trained 40 steps"), "stdout: {stdout}");
    assert!(ckpt.exists());

    let scores = dir.path().join("scores.csv");
    run_ok(bin().args([
        "score",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        test_csv.to_str().unwrap(),
        "--out",
        scores.to_str().unwrap(),
        "--emit-labels",
    ]));
    let text = std::fs::read_to_string(&scores).unwrap();
    let n_test = std::fs::read_to_string(&test_csv).unwrap().lines().count() - 1;
    // warm-up: T-1 = 31 samples produce no score
    assert_eq!(text.lines().count(), n_test - 31);

    let eval_out = run_ok(bin().args([
        "eval",
        "--scores",
        scores.to_str().unwrap(),
        "--json",
    ]));
    assert!(eval_out.contains("\"auc\":"), "eval: {eval_out}");

    let bench_out = run_ok(bin().args([
        "bench",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--iterations",
        "30",
        "--json",
    ]));
    assert!(bench_out.contains("\"frequency_hz\":"), "bench: {bench_out}");
}

#[test]
fn baseline_models_train_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = synth(dir.path(), "train.csv", 1, 0, 3);
    let test_csv = synth(dir.path(), "test.csv", 1, 3, 4);
    for (model, extra) in [
        ("knn", vec!["--k", "3", "--max-points", "300"]),
        ("iforest", vec!["--trees", "50"]),
    ] {
        let ckpt = dir.path().join(format!("{model}.ckpt"));
        let mut cmd = bin();
        cmd.args([
            "train",
            "--data",
            train_csv.to_str().unwrap(),
            "--out",
            ckpt.to_str().unwrap(),
            "--model",
            model,
        ]);
        cmd.args(&extra);
        run_ok(&mut cmd);
        let scores = dir.path().join(format!("{model}.scores"));
        run_ok(bin().args([
            "score",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--data",
            test_csv.to_str().unwrap(),
            "--out",
            scores.to_str().unwrap(),
            "--emit-labels",
        ]));
        // baselines score point-wise: no warm-up
        let n_test = std::fs::read_to_string(&test_csv).unwrap().lines().count() - 1;
        let text = std::fs::read_to_string(&scores).unwrap();
        assert_eq!(text.lines().count(), n_test, "{model} line count");
        let eval_out = run_ok(bin().args(["eval", "--scores", scores.to_str().unwrap()]));
        assert!(eval_out.contains("auc "), "{model} eval: {eval_out}");
    }
}

#[test]
fn stdin_live_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = synth(dir.path(), "train.csv", 1, 0, 5);
    let ckpt = dir.path().join("model.ckpt");
    run_ok(bin().args([
        "train",
        "--data",
        train_csv.to_str().unwrap(),
        "--out",
        ckpt.to_str().unwrap(),
        "--window",
        "16",
        "--base-maps",
        "2",
        "--steps",
        "5",
        "--batch",
        "2",
    ]));
    let mut child = bin()
        .args(["score", "--checkpoint", ckpt.to_str().unwrap(), "--data", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let csv_text = std::fs::read_to_string(&train_csv).unwrap();
    let first_40: String = csv_text.lines().take(41).map(|l| format!("{l}\n")).collect();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(first_40.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    // 40 data rows, warm-up 15 -> 25 scores
    assert_eq!(stdout.lines().count(), 25, "stdout: {stdout}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("varade.conf");
    std::fs::write(&cfg, "cycles = 1\nrate = 40\nanomalies = 9\nseed = 6\n").unwrap();
    let out_a = dir.path().join("a.csv");
    // flag --anomalies 2 overrides the config's 9
    let stdout = run_ok(bin().args([
        "--config",
        cfg.to_str().unwrap(),
        "synth",
        "--out",
        out_a.to_str().unwrap(),
        "--anomalies",
        "2",
    ]));
    assert!(stdout.contains("across 2 bursts"), "stdout: {stdout}");
    let out_b = dir.path().join("b.csv");
    let stdout = run_ok(bin().args([
        "--config",
        cfg.to_str().unwrap(),
        "synth",
        "--out",
        out_b.to_str().unwrap(),
    ]));
    assert!(stdout.contains("across 9 bursts"), "stdout: {stdout}");
}

#[test]
fn exit_codes() {
    // usage error: unknown flag
    let status = bin()
        .args(["synth", "--no-such-flag"])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // data error: missing checkpoint file
    let status = bin()
        .args(["score", "--checkpoint", "/nonexistent.ckpt", "--data", "/nonexistent.csv"])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // data error: malformed training csv
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,valid,header\n1,2,3,4\n").unwrap();
    let status = bin()
        .args(["train", "--data", bad.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
