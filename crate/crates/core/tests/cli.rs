//! End-to-end tests of the `trifree` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn trifree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trifree"))
        .args(args)
        .env_remove("TRIFREE_THREADS")
        .output()
        .expect("binary runs")
}

fn out_dir(d: &Path) -> &str {
    d.to_str().unwrap()
}

#[test]
fn run_three_vertices_ends_with_two_edges() {
    let d = tempfile::tempdir().unwrap();
    let o = trifree(&["run", "-n", "3", "--seeds", "4", "-o", out_dir(d.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_str(&fs::read_to_string(d.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["final_edges"].as_f64(), Some(2.0));
}

#[test]
fn run_is_deterministic_across_output_dirs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = trifree(&["run", "-n", "64", "--seeds", "3", "--write-edges", "-o", out_dir(d.path())]);
        assert!(o.status.success());
    }
    for f in ["summary.json", "trajectory_001.csv", "edges_002.txt"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn unknown_config_key_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = trifree(&["run", "--set", "no_such_key=1", "-o", out_dir(d.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_honoured() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 12, "seeds": 2}"#).unwrap();
    let o = trifree(&["run", "-c", cfg.to_str().unwrap(), "--print-config"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n"], 12);
    assert_eq!(v["seeds"], 2);
}

#[test]
fn injected_fault_is_reported_with_repro() {
    let d = tempfile::tempdir().unwrap();
    let o = trifree(&["verify-oracle", "--seeds", "2", "--inject-fault", "1:5", "-o", out_dir(d.path())]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("repro:"), "{stdout}");
    assert!(d.path().join("verify_report.json").exists());
}

#[test]
fn clean_verify_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = trifree(&["verify-oracle", "--seeds", "2", "-o", out_dir(d.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn unwritable_output_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = trifree(&["run", "-n", "8", "--seeds", "1", "-o", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn census_writes_frequency_table() {
    let d = tempfile::tempdir().unwrap();
    let o = trifree(&["census", "-n", "40", "--seeds", "3", "--graph", "C4", "--graph", "C5", "-o", out_dir(d.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("census.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("H,m2,n,runs,hits,freq,lo95,hi95"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn ramsey_witness_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let o = trifree(&["ramsey", "-n", "30", "--seeds", "2", "-o", out_dir(d.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w: Value = serde_json::from_str(&fs::read_to_string(d.path().join("witness_000.json")).unwrap()).unwrap();
    assert_eq!(w["n"], 30);
    assert_eq!(w["t"], w["alpha"].as_u64().unwrap() + 1);
    assert_eq!(w["edges_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn stacking_accepts_word_flag() {
    let d = tempfile::tempdir().unwrap();
    let o = trifree(&["stacking", "-n", "40", "--seeds", "1", "--pi", "YO XO O E", "-o", out_dir(d.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("stacking.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("YO XO O E,")));
    let bad = trifree(&["stacking", "-n", "40", "--pi", "E O", "-o", out_dir(d.path())]);
    assert_eq!(bad.status.code(), Some(2));
}
