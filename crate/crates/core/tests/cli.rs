use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn pfspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfspec")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pfspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON object")
}

#[test]
fn gse_sweep_writes_matching_csv() {
    let csv = scratch("gse.csv");
    let out = pfspec(&["gse", "--cutoff", "sharp:1:2", "--m", "9", "--alpha", "1", "--sweep-lambda-max", "4:64:8", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["outputs"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.split('\n').collect();
    assert_eq!(lines[0], "lambda_max,g,g_over_lambda_three_halves");
    assert_eq!(lines.len(), 10, "header, eight rows, trailing newline");
    let keys: Vec<&String> = rows[0].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["lambda_max", "g", "g_over_lambda_three_halves"]);
    for key in ["command", "inputs", "outputs", "summary", "residuals", "provenance"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["summary"]["within_band"].is_boolean());
    // both forms carry identical digits
    let first = lines[1].split(',').nth(1).unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains(first));
}

#[test]
fn binding_report_has_verdict() {
    let out = pfspec(&["binding", "--well", "1:1", "--m", "0.5", "--alpha", "0.3", "--cutoff", "sharp:1:2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let verdict = v["outputs"][0]["verdict"].as_str().unwrap();
    assert!(["no_ground_state", "ground_state_large_scale", "undecided"].contains(&verdict));
}

#[test]
fn fock_verify_exit_status_follows_threshold() {
    let ok = pfspec(&["fock-verify", "--modes", "2", "--cap", "10"]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert!(v["residuals"]["max_ccr_residual"].as_f64().unwrap() <= 1e-8);
    let strict = pfspec(&["fock-verify", "--modes", "2", "--cap", "10", "--tol", "1e-30"]);
    assert_eq!(strict.status.code(), Some(3));
    assert!(!strict.stdout.is_empty(), "report still written");
}

#[test]
fn precondition_violations_exit_two() {
    let above = pfspec(&["binding", "--m", "5"]);
    assert_eq!(above.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&above.stderr).contains("m < m_c"));
    let ir = pfspec(&["lattice", "--cutoff", "sharp:0:1"]);
    assert_eq!(ir.status.code(), Some(2));
    assert_eq!(pfspec(&["gse", "--unknown", "1"]).status.code(), Some(2));
    assert_eq!(pfspec(&["gse", "--m", "abc"]).status.code(), Some(2));
    assert_eq!(pfspec(&["gse", "--sweep-m", "1:2:2", "--sweep-alpha", "1:2:2"]).status.code(), Some(2));
    assert_eq!(pfspec(&["fock-verify", "--modes", "9", "--cap", "30"]).status.code(), Some(2));
    assert_eq!(pfspec(&[]).status.code(), Some(2));
}

#[test]
fn config_file_then_flags() {
    let path = scratch("run.cfg");
    std::fs::write(&path, "# gse settings\ngse.m = 9\ngse.alpha = 2 # overridden below\nbinding.grid_size = 100\n").unwrap();
    let out = pfspec(&["gse", "--config", path.to_str().unwrap(), "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["inputs"]["m"], "9");
    assert_eq!(v["inputs"]["alpha"], "1");
    std::fs::write(&path, "gse.mass = 9\n").unwrap();
    assert_eq!(pfspec(&["gse", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn round_trip_through_emitted_inputs() {
    let first = pfspec(&["dispersion", "--m", "1.5", "--alpha", "0.7", "--sweep-s", "0.5:7:6"]);
    assert_eq!(first.status.code(), Some(0));
    let v = json(&first);
    let inputs = v["inputs"].as_object().unwrap();
    let cfg: String = inputs.iter().map(|(k, val)| format!("dispersion.{k} = {}\n", val.as_str().unwrap())).collect();
    let path = scratch("roundtrip.cfg");
    std::fs::write(&path, cfg).unwrap();
    let second = pfspec(&["dispersion", "--config", path.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn empty_sweep_is_valid() {
    let out = pfspec(&["effmass", "--sweep-alpha", "0:1:0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["outputs"], Value::Array(vec![]));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["nelson", "--sweep-alpha", "1:9:3"];
    let a = pfspec(&args);
    let b = pfspec(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_output_path() {
    let path = scratch("out.json");
    let out = pfspec(&["symplectic-verify", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "symplectic-verify");
    assert!(v["residuals"]["intertwine_subcap"].as_f64().unwrap() < 1e-12);
}
