use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fuzzrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuzzrel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn identify_short(out: &Path) -> PathBuf {
    let o = fuzzrel(&[
        "--out-dir",
        out.to_str().unwrap(),
        "--set",
        "duration=0.3",
        "identify",
        "--spec",
        &scenario("test1.toml"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out.join("test1_snapshot.json")
}

#[test]
fn identify_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    identify_short(dir.path());
    for f in ["test1_trace.csv", "test1_report.json", "test1_snapshot.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn identify_runs_several_specs() {
    let dir = tempfile::tempdir().unwrap();
    let o = fuzzrel(&[
        "identify",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--set",
        "duration=0.2",
        "--spec",
        &scenario("test2.toml"),
        &scenario("test3.toml"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("test2_trace.csv").is_file());
    assert!(dir.path().join("test3_trace.csv").is_file());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn seed_flag_changes_the_noise() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        let o = fuzzrel(&[
            "--seed",
            seed,
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--set",
            "duration=0.1",
            "identify",
            "--spec",
            &scenario("test2.toml"),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("test2_trace.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn explain_rules_prints_rules() {
    let dir = tempfile::tempdir().unwrap();
    let snap = identify_short(dir.path());
    let o = fuzzrel(&["explain-rules", "--snapshot", snap.to_str().unwrap(), "--threshold", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(!out.is_empty());
    assert!(out.lines().all(|l| l.starts_with("IF ") && l.contains(" THEN ")));
}

#[test]
fn simulate_writes_plant_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = fuzzrel(&[
        "simulate",
        "--spec",
        &scenario("replay.toml"),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--set",
        "duration=0.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("replay_plant.csv")).unwrap();
    assert!(text.starts_with("t,u,y\n"));
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn replay_identifies_a_recorded_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = fuzzrel(&[
        "simulate",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--set",
        "duration=0.5",
        "--set",
        "name=rec",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let input = dir.path().join("rec_plant.csv");
    let o = fuzzrel(&[
        "replay",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("rec_plant_replay_report.json")).unwrap();
    assert!(report.contains("\"synthetic\": false"));
}

#[test]
fn missing_spec_is_a_runtime_error_naming_the_path() {
    let o = fuzzrel(&["identify", "--spec", "/nonexistent/test1.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/test1.toml"));
}

#[test]
fn bad_values_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let snap = identify_short(dir.path());
    let o = fuzzrel(&["explain-rules", "--snapshot", snap.to_str().unwrap(), "--threshold", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fuzzrel(&["identify", "--spec", &scenario("test1.toml"), "--set", "gamma=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("test1.toml"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(fuzzrel(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fuzzrel(&[]).status.code(), Some(1));
    assert_eq!(fuzzrel(&["identify"]).status.code(), Some(1));
    assert_eq!(fuzzrel(&["--seed", "x", "simulate"]).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    let o = fuzzrel(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("explain-rules"));
    assert_eq!(fuzzrel(&["--version"]).status.code(), Some(0));
}
