use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tnapprox::models::{random_network, Graph, RandomSpec};

fn tnapprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnapprox")).args(args).output().expect("binary runs")
}

fn reports(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("one JSON object per line"))
        .collect()
}

#[test]
fn small_lattice_matches_the_oracle() {
    let r = reports(&tnapprox(&["--dims", "2,2", "--beta", "0.4", "--chi", "8", "--oracle"]));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["oracle"], "spin_sum");
    let err = r[0]["relative_error"].as_f64().unwrap();
    assert!(err <= 1e-10, "{err}");
    assert_eq!(r[0]["closed"], true);
}

#[test]
fn sweeps_are_deterministic() {
    let args = ["--dims", "3,3", "--chi", "2,4", "--seed", "0,1", "--partition-size", "2"];
    let a = reports(&tnapprox(&args));
    let b = reports(&tnapprox(&args));
    assert_eq!(a.len(), 4);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x["ln_z"], y["ln_z"]);
        assert_eq!(x["flops"], y["flops"]);
    }
    let chis: Vec<u64> = a.iter().map(|r| r["chi"].as_u64().unwrap()).collect();
    assert_eq!(chis, vec![2, 2, 4, 4]);
}

#[test]
fn network_files_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let net = random_network(&Graph::lattice(&[2, 3]).unwrap(), &RandomSpec { alpha: -0.4, mode_size: 2, seed: 3 }).unwrap();
    let file = dir.path().join("net.json");
    tnapprox::io::save_network(&net, &file).unwrap();
    let csv = dir.path().join("out.csv");
    let jsonl = dir.path().join("out.jsonl");
    let out = tnapprox(&[
        "--model",
        "file",
        "--file",
        file.to_str().unwrap(),
        "--chi",
        "16",
        "--oracle",
        "--out",
        jsonl.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let line = std::fs::read_to_string(&jsonl).unwrap();
    let r: Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(r["model"], "file");
    assert!(r["relative_error"].as_f64().unwrap() <= 1e-10);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.starts_with("format_version,"));
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    assert_eq!(tnapprox(&["--chi", "0"]).status.code(), Some(2));
    assert_eq!(tnapprox(&["--model", "file"]).status.code(), Some(2));
    assert_eq!(tnapprox(&["--regular", "3"]).status.code(), Some(2));
}

#[test]
fn unreadable_file_fails() {
    let out = tnapprox(&["--model", "file", "--file", Path::new("/nonexistent/net.json").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}
