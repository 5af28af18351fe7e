//! The `sixvertex` binary: exit codes and output formats.

use std::process::{Command, Output};

fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sixvertex")).args(args).output().expect("binary runs")
}

const PARAMS: [&str; 8] = ["--lambda", "0.3,0.47,0.81", "--nu", "0.2,0.6,0.9", "--eta", "0.5", "--zeta-plus", "0.8"];

fn with_params<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    PARAMS.iter().chain(extra).copied().collect()
}

#[test]
fn success_emits_json() {
    let out = run(&with_params(&["--mode", "typeI", "--m", "1", "--l", "3", "--method", "both"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mode"], "typeI");
    assert_eq!(v["N"], 3);
    assert!(v["residual"].as_f64().unwrap() < 1e-8);
    assert!(v["elapsed_ms"].as_f64().is_some());
}

#[test]
fn csv_sweep_rows() {
    let out = run(&with_params(&["--mode", "sweep", "--sweep", "typeI", "--out", "csv"]));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,l,re,im,residual");
    assert!(lines[1].starts_with("1,2,"));
    assert!(lines.iter().any(|l| l.starts_with("*,*,")));
}

#[test]
fn config_error_exit_code() {
    let out = run(&with_params(&["--mode", "typeI", "--m", "2", "--l", "1"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("M < L"));
}

#[test]
fn numerical_singularity_exit_code() {
    let out = run(&["--mode", "partition", "--lambda", "0.3,0.3", "--nu", "0.2,0.6", "--eta", "0.5", "--zeta-plus", "0.8"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn verification_failure_exit_code() {
    let out = run(&["--mode", "verify", "--draws", "0", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(3));
    let ok = run(&["--mode", "verify", "--draws", "2"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn oracle_size_cap() {
    let out = run(&["--mode", "partition", "--n", "9", "--lambda-base", "0.1", "--dz", "0.05", "--nu-base", "0.2", "--dw", "0.07", "--eta", "0.5", "--zeta-plus", "0.8", "--method", "oracle"]);
    assert_eq!(out.status.code(), Some(2));
}
