use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn wmms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmms")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path: PathBuf = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const EXAMPLE: &str = r#"{"n": 2, "m": 5, "entitlements": ["1/3", "2/3"],
  "valuations": [[4, 4, 4, 3, 9], [4, 4, 4, 3, 9]]}"#;

#[test]
fn solve_reports_one_based_witness() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", EXAMPLE);
    let v = json(&wmms(&["solve", "--instance", &inst, "--agent", "1"]));
    assert_eq!(v["agent"], 1);
    assert_eq!(v["value"], "8");
    assert_eq!(v["method"], "exact");
    let witness: Vec<Vec<u64>> = serde_json::from_value(v["witness"].clone()).unwrap();
    let mut all: Vec<u64> = witness.concat();
    all.sort();
    assert_eq!(all, vec![1, 2, 3, 4, 5]);
}

#[test]
fn solve_all_agents_and_heuristic() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", EXAMPLE);
    let v = json(&wmms(&["solve", "--instance", &inst]));
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["value"], "16");
    let h = json(&wmms(&["solve", "--instance", &inst, "--agent", "2", "--heuristic", "10", "--seed", "1"]));
    assert_eq!(h["method"], "heuristic-lower-bound");
    assert!(h["states_explored"].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", EXAMPLE);
    assert_eq!(wmms(&["solve", "--instance", &inst, "--budget", "2"]).status.code(), Some(3));
    assert_eq!(wmms(&["solve", "--instance", &inst, "--agent", "3"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", r#"{"n": 2, "m": 1, "entitlements": [1, 0], "valuations": [[1], [1]]}"#);
    assert_eq!(wmms(&["solve", "--instance", &bad]).status.code(), Some(2));
    let garbled = write(dir.path(), "garbled.json", "{not json");
    assert_eq!(wmms(&["solve", "--instance", &garbled]).status.code(), Some(2));
    assert_eq!(wmms(&["gen", "--family", "nope"]).status.code(), Some(2));
    // b5 is worth more than agent 1's share of 8.
    assert_eq!(wmms(&["allocate", "--instance", &inst, "--alg", "restricted"]).status.code(), Some(2));
}

#[test]
fn allocate_round_robin_and_lp() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", EXAMPLE);
    let v = json(&wmms(&["allocate", "--instance", &inst, "--alg", "roundrobin"]));
    assert_eq!(v["allocation"], serde_json::json!([[1, 3], [2, 4, 5]]));
    assert_eq!(v["shares"], serde_json::json!(["8", "16"]));
    assert_eq!(v["guarantee"]["min_ratio"], "1");
    let lp = json(&wmms(&["allocate", "--instance", &inst, "--alg", "lp"]));
    let certs = lp["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 2);
    assert!(certs.iter().all(|c| c["holds"] == true));
    assert_eq!(certs[0]["agent"], 1);
}

#[test]
fn allocate_with_shares_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", EXAMPLE);
    let shares = write(dir.path(), "shares.json", r#"["9", 18]"#);
    let v = json(&wmms(&["allocate", "--instance", &inst, "--alg", "restricted", "--shares", &shares, "--complete"]));
    assert_eq!(v["share_method"], "provided");
    assert_eq!(v["restricted"]["completed"], true);
    let short = write(dir.path(), "short.json", r#"["9"]"#);
    assert_eq!(
        wmms(&["allocate", "--instance", &inst, "--alg", "bagfill", "--shares", &short]).status.code(),
        Some(2)
    );
}

#[test]
fn gen_writes_loadable_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce.json");
    let o = wmms(&["gen", "--family", "counterexample", "--n", "3", "--epsilon", "1/100", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["m"], 5);
    assert_eq!(v["entitlements"], serde_json::json!(["1/100", "1/100", "49/50"]));
    let s = json(&wmms(&["gen", "--family", "stochastic-items", "--n", "2", "--m", "4", "--seed", "3"]));
    assert_eq!(s["valuations"].as_array().unwrap().len(), 2);
    assert_eq!(
        wmms(&["gen", "--family", "counterexample", "--n", "3", "--epsilon", "1/2"]).status.code(),
        Some(2)
    );
}

#[test]
fn experiment_outputs_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "cfg.json", r#"{"n": 2, "m_values": [2, 3], "trials": 3, "seed": 4}"#);
    let csv = dir.path().join("r.csv");
    assert!(wmms(&["experiment", "--config", &config, "-o", csv.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,m,min_ratio,trials,share_method,wall_ms");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",exact,"));

    let js = dir.path().join("r.json");
    assert!(wmms(&["experiment", "--config", &config, "-o", js.to_str().unwrap(), "--timing"]).status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["rows"][0]["wall_ms"].is_u64());

    let bad = write(dir.path(), "bad.json", r#"{"n": 2, "m_values": [], "trials": 3, "seed": 4}"#);
    assert_eq!(wmms(&["experiment", "--config", &bad, "-o", csv.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_stochastic_reports_rate() {
    let v = json(&wmms(&[
        "verify-stochastic", "--model", "I", "--n", "2", "--m", "40", "--epsilon", "1/2", "--trials", "10", "--seed", "1",
    ]));
    assert_eq!(v["successes"], 10);
    assert_eq!(v["success_rate"], "1");
    assert_eq!(wmms(&["verify-stochastic", "--model", "III", "--n", "2", "--m", "4", "--epsilon", "1/2"]).status.code(), Some(2));
}
