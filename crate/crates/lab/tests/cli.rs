use std::path::Path;
use std::process::{Command, Output};

fn hawklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hawklab")).args(args).output().expect("spawn hawklab")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["run"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    hawklab(&all)
}

#[test]
fn list_names_every_experiment() {
    let out = hawklab(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in hawking_lab::catalog().iter().map(|(id, _)| id) {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing from:\n{text}");
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["no-such-experiment"][..],
        &["car-suite", "--set", "max_mode=3"],
        &["car-suite", "--set", "car_tol"],
        &["car-suite", "--set", "car_tol=\"tight\""],
    ] {
        let out = run_in(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_key_in_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[car_suite]\ncar_tolerance = 1e-9\n").unwrap();
    let out = run_in(dir.path(), &["car-suite", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("car_tolerance"));
}

#[test]
fn failed_assertion_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["car-suite", "--set", "car_tol=0", "--set", "gibbs_tol=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL car_relations"));
    // Reports are still written for inspection.
    assert!(dir.path().join("car_suite.json").exists());
}

#[test]
fn reports_are_written_and_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = run_in(dir.path(), &["car-suite", "--set", "seed=11"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["car_suite.csv", "car_suite.json"] {
        let first = std::fs::read(a.path().join(name)).unwrap();
        assert!(!first.is_empty());
        assert_eq!(first, std::fs::read(b.path().join(name)).unwrap(), "{name} differs between runs");
    }
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("car_suite.json")).unwrap()).unwrap();
    assert!(json.get("assertions").is_some());
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_hawklab"))
            .args(["run", "car-suite", "--out", dir.path().to_str().unwrap()])
            .env("HAWKLAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("car_suite.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn bad_thread_count_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hawklab"))
        .args(["run", "car-suite", "--out", dir.path().to_str().unwrap()])
        .env("HAWKLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
