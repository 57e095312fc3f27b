//! End-to-end tests of the `sinhmodel` binary: output shapes, values on the
//! exactly solvable Gaussian family, determinism and exit codes.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sinhmodel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sinhmodel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn endpoints_of_unit_gaussian() {
    let v = json(&["endpoints"]);
    assert!((f(&v["a"]) + PI).abs() < 1e-14);
    assert!((f(&v["b"]) - PI).abs() < 1e-14);
    assert!(v["a_N"].is_null() && v["b_N1"].is_null());
    let v = json(&["endpoints", "--N", "1e6", "--order", "1"]);
    let x = 1e6f64.powf(-0.1);
    let b1 = f(&v["b_N1"]);
    assert!((f(&v["b_N"]) - (PI + b1 * x)).abs() < 1e-9);
    assert!((f(&v["a_N"]) + f(&v["b_N"])).abs() < 1e-10);
    assert!((f(&v["a_N1"]) + b1).abs() < 1e-10);
}

#[test]
fn config_is_echoed() {
    let p = temp_file("quartic.json", r#"{"type":"even_poly","coeffs":[0,0,1,0,0.05]}"#);
    let v = json(&["--omega1", "0.8", "--alpha", "0.2", "--potential", p.to_str().unwrap(), "endpoints", "--N", "1e4"]);
    let c = &v["config"];
    assert_eq!(c["command"], "endpoints");
    assert_eq!(f(&c["omega1"]), 0.8);
    assert_eq!(f(&c["alpha"]), 0.2);
    assert_eq!(f(&c["N"]), 1e4);
    assert_eq!(c["potential"]["type"], "even_poly");
    assert_eq!(f(&c["potential"]["coeffs"][4]), 0.05);
    assert_eq!(c["order"], 3);
}

#[test]
fn floats_carry_17_significant_digits() {
    let out = run(&["endpoints"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("3.1415926535897931e0"), "{text}");
}

#[test]
fn constants_fields() {
    let v = json(&["constants"]);
    assert!((f(&v["u_1"]) - 1.0 / (4.0 * PI)).abs() < 1e-10);
    assert!(f(&v["u_2"]).abs() < 1e-10);
    assert!(f(&v["u_4"]).abs() < 1e-10);
    assert_eq!(v["u"].as_array().unwrap().len(), 6);
    assert!((f(&v["varsigma"]) - PI / 2.0).abs() < 1e-15);
    // ℸ_{0,0}: downstream value and the moment/explicit routes agree
    let d00 = f(&v["daleth_00"]);
    let sl = &v["daleth_sl"][0];
    assert_eq!((sl["s"].as_u64(), sl["l"].as_u64()), (Some(0), Some(0)));
    assert_eq!(f(&sl["value"]), d00);
    assert!((f(&sl["moment"]) - f(&sl["explicit"])).abs() < 1e-7);
    assert_eq!(v["daleth_p"].as_array().unwrap().len(), 4);
    assert!((f(&v["daleth_p"][0]["value"][0]) - 0.5).abs() < 1e-9);
    assert_eq!(v["gimel"].as_array().unwrap().len(), 10);
    assert!(f(&v["aleph0"]).is_finite() && f(&v["aleph0_alternative"]).is_finite());
}

#[test]
fn expand_on_matched_gaussian_is_zero() {
    let v = json(&["expand", "--N", "1e4"]);
    assert_eq!(f(&v["total"]), 0.0);
    assert!(v["terms"].as_array().unwrap().iter().all(|t| f(&t["value"]) == 0.0));
    // the absolute variant is then the exact Gaussian value
    let g = json(&["gaussian", "--exact", "--N", "10000"]);
    let abs = f(&v["absolute_log_z"]);
    assert!((abs - f(&g["exact"])).abs() <= 1e-12 * abs.abs());
}

#[test]
fn expand_on_quartic_reports_terms() {
    let p = temp_file("quartic2.json", r#"{"type":"even_poly","coeffs":[0,0,1,0,0.05]}"#);
    let v = json(&["--alpha", "0.2", "--potential", p.to_str().unwrap(), "expand", "--N", "1e4"]);
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 11 + 1 + 2);
    let sum: f64 = terms.iter().map(|t| f(&t["value"])).sum();
    assert!((sum - f(&v["total"])).abs() <= 1e-12 * sum.abs());
    assert!(f(&v["total"]) != 0.0);
}

#[test]
fn gaussian_residual_sweep_rows() {
    let v = json(&["gaussian", "--residual-sweep", "1e3,1e4,1e5,1e6"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for (row, n) in rows.iter().zip([1e3, 1e4, 1e5, 1e6]) {
        assert_eq!(f(&row["N"]), n);
        let r = (f(&row["exact"]) - f(&row["asymptotic"])).abs();
        assert_eq!(f(&row["residual"]), r);
    }
    assert!(v.get("exact").is_none());
}

#[test]
fn oracle_quadrature_matches_exact_gaussian() {
    let p = temp_file("gauss.json", r#"{"type":"quadratic","g":1,"t":0.3}"#);
    let pot = p.to_str().unwrap();
    let q = json(&["--alpha", "0.2", "--potential", pot, "oracle", "--quad", "--N", "2"]);
    let e = json(&["--alpha", "0.2", "--potential", pot, "gaussian", "--exact", "--N", "2"]);
    assert_eq!(q["method"], "quadrature");
    assert!((f(&q["logZ"]) - f(&e["exact"])).abs() < 1e-6);
    assert!(q["grid"]["half_width"].is_number());
}

#[test]
fn oracle_mc_is_seed_deterministic() {
    let p = temp_file("quartic3.json", r#"{"type":"even_poly","coeffs":[0,0,1,0,0.05]}"#);
    let pot = p.to_str().unwrap();
    let args = |seed: &'static str| {
        vec!["--alpha", "0.2", "--potential", pot, "--seed", seed, "oracle", "--mc", "--N", "3", "--samples", "2000", "--t-nodes", "4"]
    };
    let a = run(&args("5"));
    let b = bin().args(args("5")).env("SINHMODEL_THREADS", "1").output().unwrap();
    let c = run(&args("6"));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["method"], "mc");
    assert!(f(&v["error_estimate"]) > 0.0);
    assert_eq!(v["config"]["options"]["reference"]["type"], "quadratic");
}

#[test]
fn density_csv_grid() {
    let out = run(&["--alpha", "0.2", "density", "--N", "1e4", "--grid", "101", "--order", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let config: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config ").unwrap()).unwrap();
    assert_eq!(config["options"]["grid"], 101);
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["xi", "rho_inf", "rho_N"]);
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    let mid = &rows[50];
    assert!(mid[0].abs() < 1e-12);
    assert!((mid[1] - 1.0 / (2.0 * PI)).abs() < 1e-15);
    assert!(rows.iter().all(|r| r[1] >= 0.0 && r[2] >= 0.0));
    assert_eq!(rows[0][2], 0.0);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("sinhmodel-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("endpoints.json");
    let out = run(&["endpoints", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((f(&v["b"]) - PI).abs() < 1e-14);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--alpha", "1.5", "endpoints"]).status.code(), Some(2));
    assert_eq!(run(&["expand"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "--quad", "--N", "9"]).status.code(), Some(2));
    assert_eq!(run(&["--potential", "/nonexistent/v.json", "endpoints"]).status.code(), Some(2));
    let bad = temp_file("bad.json", r#"{"type":"cubic"}"#);
    assert_eq!(run(&["--potential", bad.to_str().unwrap(), "endpoints"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    // β ≠ 1 is outside the expansion's domain
    assert_eq!(run(&["--beta", "2", "expand", "--N", "100"]).status.code(), Some(2));
    // a box too small for the measure is a numerical failure
    let out = run(&["oracle", "--quad", "--N", "2", "--half-width", "0.5"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn selftest_subset_exit_status() {
    let ok = run(&["selftest", "--criteria", "3,4,7"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["passed"], 3);
    let table = String::from_utf8(ok.stderr).unwrap();
    assert_eq!(table.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    assert_eq!(run(&["selftest", "--criteria", "13"]).status.code(), Some(2));
}
