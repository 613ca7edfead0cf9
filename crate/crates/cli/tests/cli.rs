//! End-to-end checks of the command-line interface: output formats,
//! exit codes, and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_specdet")
}

fn write_tmp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("specdet-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn specdet")
}

const FLAT_PI: &str = r#"
a = 0.0
b = 3.141592653589793
[bc]
type = "separated"
alpha = 0.0
beta = 0.0
"#;

const FLAT_UNIT: &str = r#"
a = 0.0
b = 1.0
[bc]
type = "separated"
alpha = 0.0
beta = 0.0
"#;

#[test]
fn eig_counts_squares() {
    let prob = write_tmp("flat_pi.toml", FLAT_PI);
    let out = run(&["eig", "--problem", prob.to_str().unwrap(), "--count", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eigs = v["result"]["eigenvalues"].as_array().unwrap();
    assert_eq!(eigs.len(), 10);
    for (k, e) in eigs.iter().enumerate() {
        let lambda = e["lambda"].as_f64().unwrap();
        let expect = ((k + 1) as f64).powi(2);
        assert!((lambda - expect).abs() < 1e-6, "{lambda} vs {expect}");
    }
    // provenance block present and stable fields set
    assert_eq!(v["command"], "eig");
    assert!(v["provenance"]["integrator"]["rel_tol"].as_f64().unwrap() > 0.0);
}

#[test]
fn zeta_of_identical_pair_is_zero() {
    let p1 = write_tmp("fu1.toml", FLAT_UNIT);
    let p2 = write_tmp("fu2.toml", FLAT_UNIT);
    let out = run(&[
        "zeta",
        "--problem",
        p1.to_str().unwrap(),
        "--problem2",
        p2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["zeta_prime0"]["re_part"].as_f64().unwrap(), 0.0);
    assert_eq!(v["result"]["zeta_prime0"]["im_part"].as_f64().unwrap(), 0.0);
}

#[test]
fn det_csv_matches_closed_form() {
    let prob = write_tmp("fu3.toml", FLAT_UNIT);
    let out = run(&[
        "det",
        "--problem",
        prob.to_str().unwrap(),
        "--z",
        "-9.869604401089358,0",
        "--z0",
        "-1,0",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ratio_line = text.lines().find(|l| l.starts_with("ratio,")).unwrap();
    let ratio: f64 = ratio_line.split(',').nth(1).unwrap().parse().unwrap();
    let pi = std::f64::consts::PI;
    let expect = (pi.sinh() / pi) / 1f64.sinh();
    assert!((ratio - expect).abs() < 1e-8 * expect);
}

#[test]
fn validation_errors_exit_2() {
    let bad = write_tmp("bad.toml", "a = 0.0\n");
    let out = run(&["eig", "--problem", bad.to_str().unwrap(), "--count", "3"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["class"], "validation");
}

#[test]
fn numerical_errors_exit_3() {
    // trace at an eigenvalue: proximity guard trips
    let prob = write_tmp("flat_pi2.toml", FLAT_PI);
    let out = run(&["trace", "--problem", prob.to_str().unwrap(), "--z", "1,0"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["class"], "numerical");
}

#[test]
fn output_is_deterministic() {
    let prob = write_tmp("fu4.toml", FLAT_UNIT);
    let args = ["zeta", "--problem", prob.to_str().unwrap()];
    let out1 = run(&args);
    let out2 = run(&args);
    assert!(out1.status.success());
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn halfline_trace_diff_closed_form() {
    let text = r#"
halfline = true
q = "0"
x_max = 6.0
lambda1 = 1.0
alpha1 = 0.0
alpha2 = 1.5707963267948966
"#;
    let prob = write_tmp("hl.toml", text);
    let out = run(&["halfline", "--problem", prob.to_str().unwrap(), "--z", "-1,0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // -(d/dz) ln(i sqrt(z - 1)) at z = -1 is -1/(2(z-1)) = 0.25
    let td = v["result"]["trace_diff"]["re"].as_f64().unwrap();
    assert!((td - 0.25).abs() < 1e-8, "{td}");
    assert_eq!(v["provenance"]["lambda1"].as_f64().unwrap(), 1.0);
}

#[test]
fn eig_window_flag() {
    let prob = write_tmp("flat_pi4.toml", FLAT_PI);
    let out = run(&[
        "eig",
        "--problem",
        prob.to_str().unwrap(),
        "--window",
        "2.5,20",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lambdas: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // eigenvalues 4, 9, 16 fall inside (2.5, 20)
    assert_eq!(lambdas.len(), 3, "{lambdas:?}");
    for (lam, expect) in lambdas.iter().zip([4.0, 9.0, 16.0]) {
        assert!((lam - expect).abs() < 1e-6);
    }
}

#[test]
fn thread_cap_is_honored_and_recorded() {
    let prob = write_tmp("flat_pi3.toml", FLAT_PI);
    let out = Command::new(bin())
        .env("SPECDET_THREADS", "1")
        .args(["eig", "--problem", prob.to_str().unwrap(), "--count", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["provenance"]["threads"].as_u64(), Some(1));
}

#[test]
fn selfcheck_passes_on_pristine_build() {
    let out = run(&["selfcheck", "--format", "csv"]);
    assert!(
        out.status.success(),
        "selfcheck failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 20);
    assert!(!text.contains(",false,"));
}
