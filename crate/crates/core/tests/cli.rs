use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minmax-hyper"))
}

fn json(out: &[u8]) -> Value {
    serde_json::from_slice(out).expect("report is JSON")
}

#[test]
fn envelope_and_exit_code() {
    let out = bin().args(["constants", "--C", "2", "--no-timestamp"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "constants");
    assert_eq!(v["seed"], 0);
    assert_eq!(v["verdict"], "holds");
    assert!(v.get("timestamp").is_none());
    assert!(v.get("threads").is_none());
}

#[test]
fn seed_from_environment() {
    let out = bin()
        .args(["small-ball", "--samples", "1000", "--no-timestamp"])
        .env("MINMAX_HYPER_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(json(&out.stdout)["seed"], 17);
    let flag = bin()
        .args(["small-ball", "--samples", "1000", "--no-timestamp", "--seed", "17"])
        .output()
        .unwrap();
    assert_eq!(out.stdout, flag.stdout);
    let bad = bin().args(["constants"]).env("MINMAX_HYPER_SEED", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn writes_to_out_file() {
    let path = std::env::temp_dir().join(format!("minmax-hyper-{}.json", std::process::id()));
    let out = bin()
        .args(["moments", "--dist", "exp(1)", "--word", "max2", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!((v["report"]["norm"].as_f64().unwrap() - 1.5).abs() < 1e-9);
}

#[test]
fn failing_and_usage_exit_codes() {
    let fails = bin()
        .args(["hyper-min", "--dist", "atomzero(0.3, exp(1))", "--n-max-log2", "8", "--t-grid", "50"])
        .output()
        .unwrap();
    assert_eq!(fails.status.code(), Some(1));
    let usage = bin().args(["moments", "--dist", "nosuch(1)"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("error"));
    let usage = bin().args(["small-ball", "--cov", "1,2,2,1"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(3));
}

#[test]
fn aliases_match_descriptive_names() {
    let a = bin()
        .args(["hyp62", "--replicates", "32", "--n-max-log2", "3", "--no-timestamp"])
        .output()
        .unwrap();
    let b = bin()
        .args(["min-moment-hypothesis", "--replicates", "32", "--n-max-log2", "3", "--no-timestamp"])
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a.stdout)["report"]["asserted"], false);
}
