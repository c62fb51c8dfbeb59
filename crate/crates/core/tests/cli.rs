//! Exit codes and outputs of the command-line tool.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acr-scope")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn analyze_reports_acr_value() {
    let net = example("simple.crn");
    let out = run(&["analyze", net.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["structural"]["deficiency"], 1);
    assert_eq!(v["acr"]["acr_species_names"], serde_json::json!(["A"]), "{v}");
}

#[test]
fn missing_file_is_an_input_error() {
    assert_eq!(code(&run(&["analyze", "/nonexistent/net.crn"])), 2);
}

#[test]
fn unknown_flag_is_an_input_error() {
    assert_eq!(code(&run(&["analyze", "--frobnicate"])), 2);
}

#[test]
fn syntax_error_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.crn");
    std::fs::write(&p, "A -> @ ma(1)\n").unwrap();
    let out = run(&["analyze", p.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.crn"));
}

#[test]
fn unknown_discrete_species_is_an_input_error() {
    let net = example("simple.crn");
    assert_eq!(code(&run(&["reduce", net.to_str().unwrap(), "--discrete", "Q", "--x0", "A=2,B=1"])), 2);
}

#[test]
fn non_complex_balanced_reduction_is_an_assumption_violation() {
    let net = example("not_poisson.crn");
    let out = run(&["reduce", net.to_str().unwrap(), "--discrete", "A", "--x0", "A=2,B=1"]);
    assert_eq!(code(&out), 3);
    let all = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    assert!(all.contains("--remark-3-7"), "{all}");
}

#[test]
fn stationary_averaging_accepts_the_same_network() {
    let net = example("not_poisson.crn");
    let out = run(&["reduce", net.to_str().unwrap(), "--discrete", "A", "--x0", "A=2,B=1", "--remark-3-7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("E[A*(A-1)]"));
}

#[test]
fn boundary_hitting_limit_is_an_assumption_violation() {
    let net = example("envz_ompr.crn");
    assert_eq!(code(&run(&["reduce", net.to_str().unwrap(), "--discrete", "Y,Yp"])), 3);
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("path.csv");
    let net = example("simple.crn");
    let out = run(&[
        "simulate",
        net.to_str().unwrap(),
        "--discrete",
        "A",
        "--x0",
        "A=2,B=1",
        "--n",
        "100",
        "--t-end",
        "1",
        "--seed",
        "7",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,"));
    assert!(lines.count() > 10);
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let net = example("simple.crn");
    let args = [
        "simulate",
        net.to_str().unwrap(),
        "--discrete",
        "A",
        "--x0",
        "A=2,B=1",
        "--n",
        "50",
        "--t-end",
        "1",
        "--seed",
        "3",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn study_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "schema_version": 1,
        "name": "tiny",
        "network": example("simple.crn"),
        "alpha": {"A": 0, "B": 1},
        "x0": {"A": 2, "B": 1},
        "n_grid": [10, 20],
        "t_end": 1.0,
        "replicas": 100,
        "path_replicas": 5,
        "seed": 1,
        "observables": [{"kind": "mean", "species": "A"}],
        "thresholds": {"total_variation": 1.0}
    });
    let cfg_path = dir.path().join("tiny.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["study", cfg_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "statistics.json", "summary.md", "ode.csv", "replicas_N10.csv", "marginal_N20_t1.csv"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    std::fs::remove_file(out_dir.join("summary.md")).unwrap();
    let out = run(&["report", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("# Study `tiny`"));
    assert!(out_dir.join("summary.md").exists());
}

#[test]
fn invalid_study_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"schema_version": 1}"#).unwrap();
    assert_eq!(code(&run(&["study", p.to_str().unwrap()])), 2);
}
