use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fuchs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuchs")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

fn csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn fundamental_in_three_dimensions() {
    let out = fuchs(&["fundamental", "--p", "2", "--d", "3", "--matrix", "identity"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let c = r["results"]["constant"].as_f64().unwrap();
    assert!((c - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-14);
    for row in r["results"]["flux_table"].as_array().unwrap() {
        assert!((row["flux"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    }
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(r["inputs"]["seed"], 0);
}

#[test]
fn hardy_potential_is_fuchsian_at_origin() {
    let out = fuchs(&["fuchsian-check", "--potential", "hardy", "--lambda", "0.1", "--p", "2", "--d", "3", "--zeta", "origin"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"]["report"]["is_fuchsian"], true);
    assert_eq!(check(&r, "is_fuchsian")["passed"], true);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let out = fuchs(&["fundamental", "--config", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));

    assert_eq!(fuchs(&[]).status.code(), Some(2));
    assert_eq!(fuchs(&["fundamental", "--d", "1"]).status.code(), Some(2));
    assert_eq!(fuchs(&["solve2d", "--d", "3"]).status.code(), Some(2));
    assert_eq!(fuchs(&["fundamental", "--matrix", "diag:1,0"]).status.code(), Some(2));

    let capacity = dir.path().join("capacity.json");
    std::fs::write(&capacity, "{\"version\": 1, \"scenario\": \"capacity\"}").unwrap();
    assert_eq!(fuchs(&["fundamental", "--config", capacity.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_one() {
    // Log-rate convergence of u/μ is too slow for the default Cauchy tolerance.
    let out = fuchs(&["ratio-limit", "--p", "2", "--d", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(check(&report(&out), "regular")["passed"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("regular"));
}

#[test]
fn emitted_config_reproduces_the_flag_run() {
    let flags = ["radial-solve", "--p", "2", "--d", "3", "--potential", "hardy", "--lambda", "0.1", "--seed", "7"];
    let direct = fuchs(&flags);
    assert_eq!(direct.status.code(), Some(0));
    let mut emit_args = flags.to_vec();
    emit_args.push("--emit-config");
    let text = String::from_utf8(fuchs(&emit_args).stdout).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("radial.json");
    std::fs::write(&path, &text).unwrap();
    let again = fuchs(&["radial-solve", "--config", path.to_str().unwrap(), "--emit-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);

    let via_config = fuchs(&["radial-solve", "--config", path.to_str().unwrap()]);
    assert_eq!(via_config.stdout, direct.stdout);
    assert_eq!(report(&via_config)["inputs"]["seed"], 7);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["hardy-check", "--p", "2", "--d", "3", "--seed", "3", "--out", dir.path().to_str().unwrap()];
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let out = fuchs(&args);
        assert_eq!(out.status.code(), Some(0));
        let written = std::fs::read(dir.path().join("report.json")).unwrap();
        assert_eq!(written, out.stdout);
        bytes.push(written);
    }
    assert_eq!(bytes[0], bytes[1]);
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert!(meta["unix_time"].is_u64());
    let other = fuchs(&["hardy-check", "--p", "2", "--d", "3", "--seed", "4"]);
    assert_ne!(report(&other)["results"], report(&fuchs(&args))["results"]);
}

#[test]
fn csv_series_have_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(fuchs(&["radial-solve", "--p", "3", "--d", "2", "--cells", "64", "--csv", "--out", d]).status.code(), Some(0));
    let (header, rows) = csv(&dir.path().join("radial.csv"));
    assert_eq!(header, "r,u,flux");
    assert_eq!(rows.len(), 65);
    assert!(rows.iter().all(|r| r.len() == 3));
    assert_eq!((rows[0][0], rows[64][0]), (0.5, 2.0));

    assert_eq!(fuchs(&["ratio-limit", "--p", "2", "--d", "3", "--csv", "--out", d]).status.code(), Some(0));
    let (header, rows) = csv(&dir.path().join("ratio.csv"));
    assert_eq!(header, "R,m_r,M_r");
    assert!(rows.iter().all(|r| r[1] <= r[2]));

    assert_eq!(fuchs(&["solve2d", "--p", "2", "--h", "0.125", "--csv", "--out", d]).status.code(), Some(0));
    let (header, rows) = csv(&dir.path().join("field.csv"));
    assert_eq!(header, "x,y,u");
    assert!(!rows.is_empty());

    let text = std::fs::read_to_string(dir.path().join("radial.csv")).unwrap();
    let first = text.lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    assert_eq!(first, "5.0000000000000000e-1");

    assert_eq!(fuchs(&["radial-solve", "--csv"]).status.code(), Some(2));
}
