use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lek(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lek")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn domain_file(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn constants_json() {
    let out = lek(&["constants", "--p", "2", "--q", "1", "--N", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let close = |key: &str, want: f64, tol: f64| {
        let got = v[key].as_f64().unwrap();
        assert!((got - want).abs() < tol, "{key}: {got}");
    };
    close("pi_pq", 3.4641016, 1e-7);
    close("wI_center", 0.5, 1e-9);
    close("wI_mass", 0.333333, 1e-6);
    close("localization_constant", 0.2928932, 1e-7);
}

#[test]
fn solve_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let dom = domain_file(dir.path(), "box.json", r#"{"type":"box","min":[-1,-1],"max":[1,1]}"#);
    let csv = dir.path().join("w.csv");
    let out = lek(&["solve", "--domain", &dom, "--p", "2", "--q", "1", "--h", "0.015625", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let max = lines.map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!((max - 0.2947).abs() < 5e-3, "{max}");
    assert_eq!(text.lines().count(), 1 + 127 * 127);
}

#[test]
fn hersch_protter_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let dom = domain_file(dir.path(), "disk.json", r#"{"type":"disk","center":[0,0],"radius":1}"#);
    let out = lek(&["verify", "hersch-protter", "--domain", &dom, "--p", "2", "--q", "1", "--h", "0.01", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], Value::Bool(true));
    for key in ["check", "pass", "worst", "tol", "h", "p", "q", "alpha", "domain"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let ratio = v["metrics"]["ratio"].as_f64().unwrap();
    assert!((ratio / (8.0 / 3.0) - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let dom = domain_file(dir.path(), "tri.json", r#"{"type":"polygon","vertices":[[0,0],[2,0],[1,1.7]]}"#);
    let args = ["lambda", "--domain", &dom, "--p", "3", "--q", "1.5", "--h", "0.05", "--json"];
    let (a, b) = (lek(&args), lek(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let gap = ["verify", "gap", "--r", "3", "--samples", "5000", "--seed", "17", "--json"];
    assert_eq!(lek(&gap).stdout, lek(&gap).stdout);
    assert_ne!(lek(&gap).stdout, lek(&["verify", "gap", "--r", "3", "--samples", "5000", "--seed", "18", "--json"]).stdout);
}

#[test]
fn scan_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let dom = domain_file(dir.path(), "disk.json", r#"{"type":"disk","center":[0,0],"radius":1}"#);
    let csv = dir.path().join("scan.csv");
    let out = lek(&["scan", "--domain", &dom, "--p", "2", "--qs", "1,1.5,1.9", "--h", "0.0625", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("q,lambda,hp_lower,perim_upper,ratio"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn hidden_convexity_sweep_passes() {
    let dir = tempfile::tempdir().unwrap();
    let dom = domain_file(dir.path(), "line.json", r#"{"type":"interval","a":0,"b":1}"#);
    let out = lek(&["verify", "hidden-convexity", "--domain", &dom, "--p", "3", "--r", "2.5", "--h", "0.05", "--samples", "200", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["metrics"]["failures"].as_f64(), Some(0.0));
}

#[test]
fn slab_report() {
    let out = lek(&["slab", "--p", "2", "--q", "1", "--lengths", "2,4,8", "--h", "0.0625", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["check"], "slab_asymptotics");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let dom = domain_file(dir.path(), "box.json", r#"{"type":"box","min":[-1,-1],"max":[1,1]}"#);
    let bad = domain_file(dir.path(), "bad.json", r#"{"type":"polygon","vertices":[[0,0],[1,1],[2,2]]}"#);
    assert_eq!(lek(&["nope"]).status.code(), Some(2));
    assert_eq!(lek(&["constants", "--p", "2", "--q", "3"]).status.code(), Some(2));
    assert_eq!(lek(&["solve", "--domain", "/nonexistent.json", "--p", "2", "--q", "1", "--h", "0.1"]).status.code(), Some(2));
    assert_eq!(lek(&["solve", "--domain", &bad, "--p", "2", "--q", "1", "--h", "0.1"]).status.code(), Some(2));
    let coarse = lek(&["solve", "--domain", &dom, "--p", "2", "--q", "1", "--h", "0.5"]);
    assert_eq!(coarse.status.code(), Some(2));
    assert!(!coarse.stderr.is_empty());
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let dom = domain_file(dir.path(), "box.json", r#"{"type":"box","min":[-1,-1],"max":[1,1]}"#);
    let args = ["--domain", dom.as_str(), "--p", "3", "--q", "2", "--h", "0.125", "--tol", "1e-30", "--max-iter", "3"];
    let solve: Vec<&str> = std::iter::once("solve").chain(args).collect();
    assert_eq!(lek(&solve).status.code(), Some(3));
    let lambda: Vec<&str> = std::iter::once("lambda").chain(args).collect();
    assert_eq!(lek(&lambda).status.code(), Some(3));
}

#[test]
fn help_exits_0() {
    let out = lek(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("constants"));
}
