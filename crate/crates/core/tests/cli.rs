use std::path::Path;

use miboard::cli::run;
use miboard::server::replay;

fn packs_dir() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("packs").display().to_string()
}

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("miboard").chain(list.iter().copied()).map(String::from).collect()
}

#[test]
fn simulate_twice_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).display().to_string();
    let packs = packs_dir();
    for name in ["a.json", "b.json"] {
        let report = out(name);
        let code = run(args(&["simulate", "--players", "4", "--games", "100", "--seed", "7", "--packs", &packs, "--report", &report]));
        assert_eq!(code, 0);
    }
    let a = std::fs::read(out("a.json")).unwrap();
    assert_eq!(a, std::fs::read(out("b.json")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["games"], 100);
}

#[test]
fn simulate_logs_replay_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let csv = dir.path().join("rows.csv");
    let code = run(args(&[
        "simulate", "--players", "3", "--games", "4", "--seed", "1",
        "--policies", "uniform+greedy,stubborn,oracle:0.8",
        "--log-dir", &logs.display().to_string(),
        "--csv", &csv.display().to_string(),
        "--report", &dir.path().join("r.json").display().to_string(),
    ]));
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
    let log = logs.join("sim-2.mblog");
    assert_eq!(run(args(&["replay", "--log", &log.display().to_string()])), 0);
    let text = std::fs::read_to_string(&log).unwrap();
    let recorded = text.lines().last().unwrap();
    assert!(recorded.contains(&replay(&text).unwrap().digest));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(args(&["serve", "--bogus"])), 1);
    assert_eq!(run(args(&["simulate", "--players", "four"])), 1);
    assert_eq!(run(args(&["simulate", "--policies", "lazy"])), 1);
    assert_eq!(run(args(&["simulate", "--players", "3", "--policies", "uniform,stubborn"])), 1);
    assert_eq!(run(args(&[])), 1);
    assert_eq!(run(args(&["--help"])), 0);
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.mblog").display().to_string();
    assert_eq!(run(args(&["replay", "--log", &missing])), 2);
    let broken = dir.path().join("broken.mblog");
    std::fs::write(&broken, "{\"type\":\"entry\"}\n").unwrap();
    assert_eq!(run(args(&["replay", "--log", &broken.display().to_string()])), 2);
    assert_eq!(run(args(&["simulate", "--players", "9", "--games", "1"])), 2);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "{\"board_length\": 1}").unwrap();
    assert_eq!(run(args(&["simulate", "--games", "1", "--config", &cfg.display().to_string()])), 2);
}
