//! The `aging` binary: outputs, exit codes and bundled scenarios.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aging(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aging")).args(args).env("AGING_THREADS", "2").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_scenario(dir: &Path) -> String {
    let text = r#"{
        "scenario": {
            "wave": {"antenna_count": 4},
            "users": [
                {"stats": {"doppler": {"form": "constant", "a": 60}}, "pilot_power": 1, "data_power": 1},
                {"stats": {"doppler": {"form": "constant", "a": 10}, "path_loss_db": 10}, "pilot_power": 1, "data_power": 1}
            ],
            "pilot_noise": 0.01,
            "data_noise": {"variance": 0.01}
        },
        "optimizer": {"q_max": 6, "m_max": 2}
    }"#;
    let p = dir.join("small.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn deteq_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let s = small_scenario(dir.path());
    let out = dir.path().join("out");
    let o = aging(&["deteq", "--scenario", &s, "--layout", "3,3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("ASE"));
    let csv = fs::read_to_string(out.join("deteq_slots_v1.csv")).unwrap();
    assert!(csv.starts_with("slot,kind,se,"));
    assert_eq!(csv.lines().count(), 7);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "deteq");
    assert!(report["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn optimize_reports_the_search() {
    let dir = tempfile::tempdir().unwrap();
    let s = small_scenario(dir.path());
    let out = dir.path().join("out");
    let o = aging(&["optimize", "--scenario", &s, "--fixed-powers", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("q* ="));
    let csv = fs::read_to_string(out.join("candidates_v1.csv")).unwrap();
    // 5 single-frame plus 4 two-frame layouts, plus the header
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn validation_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(
        &p,
        r#"{"scenario": {"wave": {"antenna_count": 4},
            "users": [{"stats": {}, "pilot_power": 1, "data_power": -1}],
            "pilot_noise": 0.01, "data_noise": {"variance": 0.01}}}"#,
    )
    .unwrap();
    let o = aging(&["deteq", "--scenario", p.to_str().unwrap(), "--layout", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario.users[0].data_power"), "{}", stderr(&o));

    let s = small_scenario(dir.path());
    let o = aging(&["deteq", "--scenario", &s, "--layout", "3,1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn montecarlo_dumps_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let s = small_scenario(dir.path());
    let out = dir.path().join("out");
    let args = ["montecarlo", "--scenario", &s, "--layout", "4", "--trials", "50", "--seed", "7", "--dump-trajectory"];
    let o = aging(&[&args[..], &["--out", out.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = fs::read_to_string(out.join("trajectory_v1.csv")).unwrap();
    assert!(traj.starts_with("slot,user,antenna,re,im\n"));
    // 4 slots, 2 users, 4 antennas
    assert_eq!(traj.lines().count(), 1 + 4 * 2 * 4);
    let again = aging(&[&args[..], &["--out", dir.path().join("again").to_str().unwrap()]].concat());
    assert!(again.status.success());
    assert_eq!(traj, fs::read_to_string(dir.path().join("again/trajectory_v1.csv")).unwrap());
}

#[test]
fn sweep_uses_bundled_scenarios() {
    let o = aging(&["sweep", "--scenario", "bundled:doppler", "--param", "fd1", "--values", "0.1,100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("distinct optimal layouts"));
    let o = aging(&["sweep", "--scenario", "bundled:nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("available"));
}

#[test]
fn table1_assert_mode_flags_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let o = aging(&["table1", "--assert", "--out", dir.path().to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("block 1: argmax [12] (reference [12]) match"), "{text}");
    let mismatch = text.contains("MISMATCH");
    assert_eq!(o.status.code(), Some(if mismatch { 3 } else { 0 }));
    assert!(dir.path().join("table1_v1.csv").exists());
}
