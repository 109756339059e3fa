//! The `trop-hodge` binary: exit codes, stdout and stderr.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trop-hodge")).args(args).output().expect("binary runs")
}

#[test]
fn genus_of_theta() {
    let o = run(&["genus", &fixture("theta.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), r#"{"genus":2}"#);
}

#[test]
fn verify_triangle_passes() {
    let o = run(&["verify", &fixture("triangle.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["status"] == "pass"));
}

#[test]
fn validate_bad_curve_exits_2() {
    let o = run(&["validate", &fixture("bad.json")]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(v["error"]["message"].as_str().unwrap().contains("degree"));
}

#[test]
fn validate_good_curve() {
    let o = run(&["validate", &fixture("triangle_legs.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], true);
}

#[test]
fn failed_check_exits_1() {
    let o = run(&["verify", &fixture("triangle.json"), "--h-list", "1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let failed: Vec<_> = v["checks"].as_array().unwrap().iter().filter(|c| c["status"] != "pass").collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["residual"].is_null()));
}

#[test]
fn thread_variable() {
    let o = Command::new(env!("CARGO_BIN_EXE_trop-hodge"))
        .args(["genus", &fixture("k4.json")])
        .env("TROP_HODGE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_trop-hodge"))
        .args(["genus", &fixture("k4.json")])
        .env("TROP_HODGE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_file_and_spectrum_csv() {
    let dir = std::env::temp_dir().join(format!("trop-hodge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("s.json");
    let csv = dir.join("s.csv");
    let o = run(&[
        "spectrum",
        &fixture("triangle.json"),
        "--bidegree",
        "00",
        "--h",
        "1/32",
        "--k",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let l1 = v["spectrum"]["eigenvalues"][1].as_f64().unwrap();
    assert!((l1 - (2.0 * std::f64::consts::PI / 3.0).powi(2)).abs() < 0.01);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("index,eigenvalue,h\n0,"));
    std::fs::remove_dir_all(&dir).ok();
}
