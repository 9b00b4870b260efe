mod common;

use std::process::{Command, Output};

use common::heisenberg_json;

fn submersion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_submersion")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn catalog_list_and_show() {
    let out = submersion(&["catalog", "list"]);
    assert!(out.status.success());
    let names: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert!(names.iter().any(|n| n == "gigseh"));
    let show = submersion(&["catalog", "show", "gigseh"]);
    assert!(show.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&show)).unwrap();
    assert_eq!(v["name"], "gigseh");
    assert_eq!(submersion(&["catalog", "show", "nonexistent"]).status.code(), Some(1));
}

#[test]
fn holding_run_exits_zero() {
    let out = submersion(&["catalog", "run", "gigseh"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(!report["entries"].as_array().unwrap().is_empty());
}

#[test]
fn violated_run_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heisenberg.json");
    std::fs::write(&path, heisenberg_json(&[[0.0; 5]], &["thm41"])).unwrap();
    let out = submersion(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"dimension\": ").unwrap();
    let out = submersion(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let missing = submersion(&["verify", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    let bad_theorem = submersion(&["catalog", "run", "gigseh", "--theorem", "thm99"]);
    assert_eq!(bad_theorem.status.code(), Some(1));
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = submersion(&[
        "catalog",
        "run",
        "hopf_s7_s4",
        "--point",
        "0",
        "--theorem",
        "thm31",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("theorem"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].contains("thm31"));
}

#[test]
fn lemma_subcommand() {
    let out = submersion(&["lemma", "--k", "4", "--a", "1,2,3,3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // 9²/3 − (1 + 4 + 9 + 9)
    assert!((v["b"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!(v["result"]["gap"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["result"]["equality"], true);

    let neg = submersion(&["lemma", "--k", "3", "--a", "-1,2,0.5"]);
    assert!(neg.status.success());
    assert_eq!(submersion(&["lemma", "--k", "3", "--a", "1,2"]).status.code(), Some(1));
    assert_eq!(submersion(&["lemma", "--k", "2", "--a", "1,2"]).status.code(), Some(1));
}
