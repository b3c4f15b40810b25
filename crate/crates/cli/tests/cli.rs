//! End-to-end CLI behavior: subcommands, exit codes, and file outputs.

use std::path::Path;
use std::process::{Command, Output};

fn neutro_audit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neutro-audit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_mock_config(dir: &Path, seed: u64) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let config = serde_json::json!({
        "models": ["gpt-4o", "gpt-4-turbo", "gpt-3.5-turbo", "gpt-4o-mini"],
        "strategies": ["neutrosophic", "probabilistic", "entropy_derived"],
        "repetitions": 5,
        "temperature": 0.7,
        "run_date": "2026-04-30",
        "concurrency": 4,
        "backend": {"kind": "mock", "seed": seed}
    });
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn bank_prints_the_five_stimuli() {
    let out = neutro_audit(&["bank"]);
    assert!(out.status.success());
    let bank: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = bank.as_array().unwrap();
    assert_eq!(entries.len(), 5);
    let statements: Vec<&str> = entries
        .iter()
        .map(|e| e["statement"].as_str().unwrap())
        .collect();
    assert!(statements.contains(&"This sentence is false."));
    assert!(statements
        .contains(&"Lying to save an innocent life is morally right and wrong at the same time."));
}

#[test]
fn run_analyze_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_mock_config(dir.path(), 42);
    let records = dir.path().join("records.jsonl");

    // run
    let out = neutro_audit(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        records.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = std::fs::read_to_string(&records).unwrap().lines().count();
    assert_eq!(lines, 300);
    assert!(records
        .with_file_name("records.jsonl.manifest.json")
        .exists());

    // resume on the complete file: success, still 300 records
    let out = neutro_audit(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        records.to_str().unwrap(),
        "--resume",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::read_to_string(&records).unwrap().lines().count(),
        300
    );

    // analyze, both formats
    let report_dir = dir.path().join("report");
    let out = neutro_audit(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--out-dir",
        report_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(report_dir.join("hypertruth.md").exists());
    assert!(report_dir.join("hypertruth.csv").exists());
    assert!(report_dir.join("components.csv").exists());
    // 300 data rows + header
    let components = std::fs::read_to_string(report_dir.join("components.csv")).unwrap();
    assert_eq!(components.lines().count(), 301);

    // analyze is deterministic: a second pass over the same records
    // produces byte-identical files
    let report_dir_2 = dir.path().join("report2");
    let out = neutro_audit(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--out-dir",
        report_dir_2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for entry in std::fs::read_dir(&report_dir).unwrap() {
        let path = entry.unwrap().path();
        let twin = report_dir_2.join(path.file_name().unwrap());
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&twin).unwrap(),
            "{path:?} differs across analyze runs"
        );
    }

    // analyze, csv only: no markdown emitted
    let csv_dir = dir.path().join("csv_only");
    let out = neutro_audit(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--out-dir",
        csv_dir.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert!(!csv_dir.join("hypertruth.md").exists());
    assert!(csv_dir.join("hypertruth.csv").exists());

    // verify without acknowledgement: refused (mock data), runtime error
    let out = neutro_audit(&["verify", "--records", records.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mock"));

    // verify with acknowledgement: runs, targets fail, exit 3
    let out = neutro_audit(&[
        "verify",
        "--records",
        records.to_str().unwrap(),
        "--not-paper-data",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("target"));
    assert!(stdout.contains("FAIL"));
}

#[test]
fn run_determinism_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_mock_config(dir.path(), 7);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out_path in [&a, &b] {
        let out = neutro_audit(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn missing_config_is_a_runtime_error_naming_the_path() {
    let out = neutro_audit(&[
        "run",
        "--config",
        "/nonexistent/config.json",
        "--out",
        "/tmp/x.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/config.json"));
}

#[test]
fn empty_dataset_analyze_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("empty.jsonl");
    std::fs::write(&records, "").unwrap();
    let out = neutro_audit(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--out-dir",
        dir.path().join("report").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no valid records"));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let out = neutro_audit(&["--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = neutro_audit(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("neutro-audit"));

    let out = neutro_audit(&[
        "analyze",
        "--records",
        "x.jsonl",
        "--out-dir",
        "y",
        "--format",
        "pdf",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flag_overrides_beat_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_mock_config(dir.path(), 42);
    let records = dir.path().join("records.jsonl");
    let out = neutro_audit(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        records.to_str().unwrap(),
        "--models",
        "gpt-4o",
        "--repetitions",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // 1 model x 5 phenomena x 3 strategies x 1 repetition
    assert_eq!(
        std::fs::read_to_string(&records).unwrap().lines().count(),
        15
    );
}
