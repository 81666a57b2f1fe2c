//! End-to-end runs of the `stle` binary on the fixture files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn stle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stle"))
        .args(args)
        .env_remove("STLE_LOG")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn monitor_approach_trace_is_violated() {
    let out = stle(&[
        "monitor",
        "--spec",
        &fixture("laws.stl"),
        "--top-formula",
        "law38_sub3",
        &fixture("approach_trace.json"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["rho"], 0.0);
    assert_eq!(report["satisfied"], false);
    let prefix: Vec<f64> = serde_json::from_value(report["prefix"].clone()).unwrap();
    for (got, want) in prefix.iter().zip([42.0, 28.66, 17.17, 6.15]) {
        assert!((got - want).abs() < 1e-9);
    }
}

#[test]
fn monitor_speed_limit_passes_by_five() {
    let out = stle(&[
        "monitor",
        "--spec",
        &fixture("laws.stl"),
        "--top-formula",
        "speed_below_90",
        &fixture("speed85_trace.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["rho"], 5.0);
}

#[test]
fn monitor_builds_trace_from_trajectory() {
    let out = stle(&[
        "monitor",
        "--spec",
        &fixture("laws.stl"),
        &fixture("approach_trajectory.json"),
        "--environment",
        &fixture("approach_environment.json"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["formula"], "laws");
    assert_eq!(report["slots"], serde_json::json!(["fogLight", "warningFlash"]));
    assert_eq!(report["assignment"][0], serde_json::json!([1.0, 1.0]));
}

#[test]
fn errors_exit_two() {
    let missing = stle(&["monitor", "--spec", &fixture("laws.stl"), &fixture("no-such-file.json")]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    let flag = stle(&["simulate", "--scenario", "red-light", "--bogus"]);
    assert_eq!(flag.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&flag.stderr).contains("Usage"));

    let bad_a = stle(&[
        "monitor",
        "--spec",
        &fixture("laws.stl"),
        "--smoothness-a",
        "0",
        &fixture("speed85_trace.json"),
    ]);
    assert_eq!(bad_a.status.code(), Some(2));

    let bad_top = stle(&[
        "monitor",
        "--spec",
        &fixture("laws.stl"),
        "--top-formula",
        "nope",
        &fixture("speed85_trace.json"),
    ]);
    assert_eq!(bad_top.status.code(), Some(2));
}

#[test]
fn repair_writes_trajectory_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("repaired.json");
    let log = dir.path().join("repair.jsonl");
    let status = stle(&[
        "repair",
        "--spec",
        &fixture("laws.stl"),
        "--top-formula",
        "law38_sub3",
        "--theta",
        "10",
        &fixture("approach_trajectory.json"),
        "--environment",
        &fixture("approach_environment.json"),
        "--out",
        out.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );

    let entry: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&log).unwrap().trim()).unwrap();
    assert_eq!(entry["step"], 3);
    assert_eq!(entry["edits"][0]["signal"], "D(stopline)");
    assert!((entry["edits"][0]["requested"].as_f64().unwrap() - 7.7).abs() < 1e-2);
    assert!((entry["rho_after"].as_f64().unwrap() - 13.85).abs() < 5e-2);

    let repaired: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let y = repaired["waypoints"][3]["y"].as_f64().unwrap();
    assert!((y - 28.15).abs() <= 0.05, "{y}");
}

#[test]
fn satisfied_input_is_copied_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("same.json");
    let log = dir.path().join("same.jsonl");
    let status = stle(&[
        "repair",
        "--spec",
        &fixture("laws.stl"),
        "--top-formula",
        "speed_below_90",
        &fixture("approach_trajectory.json"),
        "--environment",
        &fixture("approach_environment.json"),
        "--out",
        out.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(fixture("approach_trajectory.json")).unwrap()
    );
    assert!(std::fs::read(&log).unwrap().is_empty());
}

#[test]
fn unrepairable_exits_three() {
    // At the red step the stopline is behind the vehicle and nothing
    // controllable has a gradient.
    let out = stle(&[
        "repair",
        "--spec",
        &fixture("laws.stl"),
        "--top-formula",
        "law38_sub3",
        &fixture("approach_trajectory.json"),
        "--environment",
        &fixture("approach_environment.json"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unrepairable"));
}

#[test]
fn simulate_writes_reports_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let d = dir.path().join(sub);
        let out = stle(&[
            "simulate",
            "--scenario",
            "red-light",
            "--seeds",
            "2",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        (String::from_utf8(out.stdout).unwrap(), d)
    };
    let (stdout, first) = run("a");
    assert!(stdout.contains("red-light (enforced, theta 0.7): "), "{stdout}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(first.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2);
    let ticks = std::fs::read_to_string(first.join("ticks-red-light-0.jsonl")).unwrap();
    let line: serde_json::Value = serde_json::from_str(ticks.lines().next().unwrap()).unwrap();
    assert_eq!(line["scenario"], "red-light");
    assert!(line.get("rho").is_some() && line.get("eval_ms").is_some());

    // Same seeds, same trajectories; only wall-clock fields differ.
    let (_, second) = run("b");
    let strip = |path: PathBuf| -> Vec<serde_json::Value> {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        v.as_array()
            .unwrap()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                for key in ["run_s", "avg_eval_ms", "ticks"] {
                    r.as_object_mut().unwrap().remove(key);
                }
                r
            })
            .collect()
    };
    assert_eq!(strip(first.join("summary.json")), strip(second.join("summary.json")));
}

#[test]
fn baseline_fails_where_enforcement_passes() {
    let count = |extra: &[&str]| -> usize {
        let mut args = vec!["simulate", "--scenario", "red-light", "--seeds", "3"];
        args.extend_from_slice(extra);
        let out = stle(&args);
        let text = String::from_utf8(out.stdout).unwrap();
        let passed = text.split(": ").nth(1).unwrap().split('/').next().unwrap();
        passed.parse().unwrap()
    };
    assert!(count(&["--no-enforce"]) < count(&["--enforce"]));
}

#[test]
fn sweep_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = stle(&[
        "sweep",
        "--scenario",
        "fog",
        "--theta",
        "0.0:0.2:0.1",
        "--seeds",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "scenario",
            "theta",
            "seed",
            "pass",
            "final_rho",
            "fixes",
            "max_fix",
            "fix_pct",
            "avg_eval_ms",
            "run_s"
        ]
    );
    // Baseline plus three thresholds, for each of two seeds.
    assert_eq!(reader.records().count(), 8);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 3);
}
