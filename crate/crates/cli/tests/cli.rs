use std::path::Path;
use std::process::{Command, Output};

fn tethernet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tethernet"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evaluate_rejects_zero_rollouts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tethernet(&[
        "evaluate",
        "--baseline-close-time",
        "10",
        "--n",
        "0",
        "--out",
        path(tmp.path()),
    ]);
    assert!(!out.status.success());
}

#[test]
fn evaluate_needs_a_policy_or_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tethernet(&["evaluate", "--n", "2", "--out", path(tmp.path())]);
    assert!(!out.status.success());
}

#[test]
fn threshold_miss_exits_with_two_and_still_writes_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tethernet(&[
        "evaluate",
        "--preset",
        "desk",
        "--baseline-close-time",
        "0",
        "--n",
        "4",
        "--threshold",
        "1.01",
        "--seed",
        "1",
        "--out",
        path(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_rollouts"], 4);
    assert!(tmp.path().join("manifest.json").exists());
    assert!(!tmp.path().join(".lock").exists());
}

#[test]
fn comparison_table_is_written() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tethernet(&[
        "evaluate",
        "--preset",
        "desk",
        "--baseline-close-time",
        "12",
        "--n",
        "2",
        "--compare-success",
        "0.96",
        "--compare-cqi",
        "1.010",
        "--out",
        path(tmp.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("baseline"));
    assert!(tmp.path().join("comparison.json").exists());
}

#[test]
fn rollout_records_one_line_per_control_step() {
    let tmp = tempfile::tempdir().unwrap();
    let record = tmp.path().join("traj.jsonl");
    let out = tethernet(&[
        "rollout",
        "--preset",
        "desk",
        "--close-time",
        "10",
        "--distance",
        "30",
        "--orientation",
        "0",
        "0",
        "0",
        "--angular-velocity",
        "0",
        "0.1",
        "-0.1",
        "--record",
        path(&record),
        "--out",
        path(tmp.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&record).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // Closing at 10 s plus the 20 s settle window, with or without an initial record.
    assert!((30..=31).contains(&lines.len()), "{} lines", lines.len());
}

#[test]
fn locked_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join(".lock"), "").unwrap();
    let out = tethernet(&[
        "evaluate",
        "--baseline-close-time",
        "10",
        "--n",
        "1",
        "--out",
        path(tmp.path()),
    ]);
    assert!(!out.status.success());
}
