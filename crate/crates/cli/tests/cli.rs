use std::process::{Command, Output};

use serde_json::Value;

fn ssred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssred")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn certified_run_exits_zero() {
    let out = ssred(&["--p", "5", "--k", "6", "--L-val", "-3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["semistable"]["reduction"]["classification"]["label"], "Ind(ω₂^5 · χ)");
    assert_eq!(v["config"]["l"]["representative_dependent"], true);
}

#[test]
fn literal_and_text_format() {
    let out = ssred(&["--p", "3", "--k", "4", "--L", "p^-1", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Ind(ω₂^3 · χ)"));
    assert!(text.contains("verdict: true (exit 0)"));
}

#[test]
fn refusals_exit_two() {
    assert_eq!(ssred(&["--p", "2", "--k", "6", "--L", "p^-3"]).status.code(), Some(2));
    assert_eq!(ssred(&["--p", "3", "--k", "3", "--L-val", "-1"]).status.code(), Some(2));
    assert_eq!(ssred(&["--p", "5", "--k", "6", "--L-val", "-1/3"]).status.code(), Some(2));
    assert_eq!(ssred(&["--p", "5", "--k", "6", "--L", "p^-3", "--L-val", "-3"]).status.code(), Some(2));
}

#[test]
fn weak_bound_admits_p3_h2() {
    let out = ssred(&["--p", "3", "--k", "3", "--L-val", "-1", "--weak-bound"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["bound"]["kind"], "weak");
}

#[test]
fn negative_control_reports_without_asserting() {
    let out = ssred(&["--p", "3", "--k", "6", "--L-val", "-2"]);
    let v = json(&out);
    assert_eq!(v["bound"]["holds"], false);
    let stages = v["stages"].as_array().unwrap();
    let descent = stages.iter().find(|s| s["name"] == "descent").unwrap();
    for c in descent["certificates"].as_array().unwrap() {
        assert_eq!(c["asserted"], false, "{}", c["name"]);
    }
}

#[test]
fn sweep_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.json");
    let out = ssred(&["--sweep", "p=3;k=4..6:2;v=-3..-2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["summary"]["cells"], 4);
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_sweep_spec_exits_two() {
    assert_eq!(ssred(&["--sweep", "q=3"]).status.code(), Some(2));
}
