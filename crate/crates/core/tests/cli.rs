use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinai-lab"))
        .args(args)
        .env("SINAI_LAB_THREADS", "2")
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["generate", "--seed", "3", "--half-width", "300", "--out", out]).status.code(), Some(0));
    let env = dir.path().join("environment.json");
    let env = env.to_str().unwrap();

    let ls = run(&["landscape", "--env", env, "--t", "e3"]);
    assert_eq!(ls.status.code(), Some(0));
    let ls: Value = serde_json::from_slice(&ls.stdout).unwrap();
    let marks = &ls["landscape"]["landmarks"];
    assert!(marks["m_minus"].as_f64().unwrap() <= 0.0 && marks["m_plus"].as_f64().unwrap() >= 0.0);

    let svg = run(&["landscape", "--env", env, "--t", "e^3", "--eps", "0.2", "--format", "svg"]);
    assert_eq!(svg.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&svg.stdout).starts_with("<svg"));

    let a = run(&["simulate", "--env", env, "--t", "50", "--trials", "4", "--walk-seed", "9"]);
    let b = run(&["simulate", "--env", env, "--t", "50", "--trials", "4", "--walk-seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let csv = run(&["simulate", "--env", env, "--t", "50", "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&csv.stdout).lines().count() > 1);
}

#[test]
fn usage_and_window_errors_exit_two() {
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["landscape", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["landscape", "--t", "e0x"]).status.code(), Some(2));
    let small = run(&["landscape", "--half-width", "20", "--t", "e10"]);
    assert_eq!(small.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&small.stderr).contains("window exhausted"));
}

#[test]
fn verify_writes_a_report_that_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let out = run(&["verify", "ruin", "--seed", "5", "--out", first.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));

    let report = first.join("report.json");
    let again = run(&["verify", "ruin", "--config", report.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));

    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("generated_at");
        v["provenance"].as_object_mut().unwrap().remove("invocation");
        v
    };
    let a = read_json(&report);
    assert_eq!(a["pass"], Value::Bool(true));
    assert_eq!(a["provenance"]["config"]["seed"], 5);
    assert_eq!(strip(a), strip(read_json(&second.join("report.json"))));
}
