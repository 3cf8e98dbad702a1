use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn dynwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

const SMALL: [&str; 12] = [
    "--env", "east", "--L", "16", "--p", "0.7", "--eps", "0.25", "--N", "200", "--M", "300",
];

#[test]
fn estimate_writes_report_manifest_and_csv() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["estimate"];
    args.extend(SMALL);
    args.extend([
        "--seed",
        "1",
        "--trajectories",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let o = dynwalk(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    let report: Value = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    assert_eq!(report["config"]["env"]["L"], 16);
    assert_eq!(report["estimate"]["trials"], 300);
    assert!(report["exact_speed"].is_null());

    let manifest: Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "estimate");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["result"], report);
    assert!(manifest["started"].as_str().unwrap().ends_with('Z'));

    let sweep = read(&out.join("sweep.csv"));
    assert_eq!(
        sweep.lines().next().unwrap(),
        "epsilon,mean,se,ci_low,ci_high,exact_speed"
    );
    assert_eq!(sweep.lines().count(), 2);
    let traj = read(&out.join("trajectories.csv"));
    assert_eq!(traj.lines().count(), 1 + 3 * 201);
}

#[test]
fn reports_are_byte_identical_across_runs_and_pool_sizes() {
    let dir = tempdir().unwrap();
    let mut reports = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = dir.path().join(name);
        let mut args = vec!["--workers", workers, "estimate", "--antisymmetry"];
        args.extend(SMALL);
        args.extend(["--out", out.to_str().unwrap()]);
        let o = dynwalk(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        reports.push(read(&out.join("report.json")));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn epsilon_outside_range_is_a_usage_error() {
    let o = dynwalk(&["estimate", "--eps", "0.9", "--N", "10", "--M", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(
        msg.contains("[-1/2, 1/2]") && msg.contains("--eps"),
        "{msg}"
    );
}

#[test]
fn invalid_fields_are_named() {
    let o = dynwalk(&["estimate", "--L", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--L"), "{}", stderr(&o));

    let o = dynwalk(&["estimate", "--env", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--env"));

    let o = dynwalk(&["estimate", "--mode", "sideways"]);
    assert_eq!(o.status.code(), Some(2));

    let o = dynwalk(&["estimate", "--env", "east", "--p", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--p"), "{}", stderr(&o));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"env": {"kind": "ssep", "L": 5, "p": 0.4}, "epsilon": 0.1, "horizon": 100, "trials": 50, "seed": 3}"#)
        .unwrap();
    let o = dynwalk(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--eps",
        "-0.2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["config"]["env"]["kind"], "ssep-random-scan");
    assert_eq!(report["config"]["env"]["L"], 5);
    assert_eq!(report["config"]["epsilon"], -0.2);
    assert_eq!(report["config"]["seed"], 3);
    // L = 5 ssep is within the oracle's reach
    assert!(report["exact_speed"].is_number());
}

#[test]
fn bad_config_files_name_the_field() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"env": {"L": "big"}}"#).unwrap();
    let o = dynwalk(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("env.L"), "{}", stderr(&o));

    std::fs::write(&cfg, r#"{"trails": 10}"#).unwrap();
    let o = dynwalk(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trails"), "{}", stderr(&o));
}

#[test]
fn unknown_suite_exits_two() {
    let o = dynwalk(&["verify", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("non-crossing"));
}

#[test]
fn verify_suites_pass() {
    for suite in ["detailed-balance", "oracle-antisymmetry"] {
        let o = dynwalk(&["verify", suite]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() > 10);
        assert!(!text.contains("FAIL "));
    }
}

#[test]
fn sweep_rows_and_symmetry() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = dynwalk(&[
        "sweep",
        "--env",
        "east",
        "--L",
        "32",
        "--N",
        "500",
        "--M",
        "1000",
        "--seed",
        "5",
        "--grid",
        "-0.4:0.4:0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(&out.join("sweep.csv"));
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(5).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    let zero = &rows[4];
    assert_eq!(zero[0], 0.0);
    assert!(zero[3] <= 0.0 && 0.0 <= zero[4]);
    for i in 0..4 {
        let (a, b) = (&rows[i], &rows[8 - i]);
        assert_eq!(a[0], -b[0]);
        let joint = a[2].hypot(b[2]);
        assert!(
            (a[1] + b[1]).abs() <= 4.0 * joint,
            "eps {}: {} vs {}",
            b[0],
            b[1],
            a[1]
        );
    }
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("orig");
    let o = dynwalk(&[
        "sweep",
        "--env",
        "ssep",
        "--L",
        "4",
        "--N",
        "50",
        "--M",
        "40",
        "--grid",
        "-0.3,0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = out.join("manifest.json");
    let again = dir.path().join("again");
    let o = dynwalk(&[
        "replay",
        manifest.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        read(&out.join("report.json")),
        read(&again.join("report.json"))
    );

    let mut m: Value = serde_json::from_str(&read(&manifest)).unwrap();
    m["result"]["rows"][0]["mean"] = Value::from(0.123);
    std::fs::write(&manifest, serde_json::to_string(&m).unwrap()).unwrap();
    let o = dynwalk(&["replay", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn walkthrough_writes_pairs() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("w");
    let o = dynwalk(&[
        "walkthrough",
        "--env",
        "east",
        "--L",
        "5",
        "--N",
        "64",
        "--M",
        "200",
        "--pairs",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    assert_eq!(report["speeds"], "exact");
    assert_eq!(report["walkthrough"]["non_crossing_violations"], 0);
    let pairs = read(&out.join("pairs.csv"));
    assert_eq!(pairs.lines().count(), 1 + 4 * 2 * 65);
}

#[test]
fn continuous_mode_runs() {
    let o = dynwalk(&[
        "estimate",
        "--mode",
        "continuous",
        "--env",
        "iid",
        "--L",
        "8",
        "--N",
        "20.5",
        "--M",
        "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["config"]["time_mode"], "continuous");
    assert!(report["exact_speed"].is_null());
}
