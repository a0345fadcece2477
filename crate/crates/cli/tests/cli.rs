use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qcurv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcurv"))
        .current_dir(dir)
        .env_remove("QCURV_CONFIG")
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stdout);
    serde_json::from_str(text.lines().next().unwrap_or("")).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

/// Parses a CSV into header plus numeric/text cells, checking every row has the header width.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    for r in &rows {
        assert_eq!(r.len(), header.len());
    }
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn solve_spherical_writes_trajectory() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["solve", "--m", "2", "--sign", "+1", "--a", "5.9506425,-32", "--rmax", "100"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    assert_eq!(summary["outcome"], "GlobalToRmax");
    assert_eq!(summary["r_end"].as_f64(), Some(100.0));
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["r", "w0", "w1", "dw0", "dw1", "source"]);
    assert_eq!(rows.len() as u64, summary["nodes"].as_u64().unwrap());
    for r in &rows {
        r.iter().for_each(|c| {
            num(c);
        });
    }
    assert_eq!(num(&rows[0][0]), 0.0);
}

#[test]
fn solve_minus_sign_is_global() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["solve", "--m", "2", "--sign", "-1", "--a", "0,0", "--rmax", "50"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["outcome"], "GlobalToRmax");
}

#[test]
fn solve_blow_up_exits_2() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["solve", "--m", "2", "--sign", "+1", "--a", "0,0"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout_json(&o)["outcome"], "BlowUp");
}

#[test]
fn step_underflow_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"h_min":0.3,"h_init":0.4,"h_max":0.5,"rel_tol":1e-14,"abs_tol":1e-14}"#).unwrap();
    let o = qcurv(dir.path(), &["--config", cfg.to_str().unwrap(), "solve", "--m", "2", "--sign", "-1", "--a", "0,0"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["outcome"], "StepUnderflow");
}

#[test]
fn usage_errors_exit_64() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["solve", "--m", "2", "--sign", "-1"],
        vec!["solve", "--m", "2", "--sign", "-1", "--a", "x,1"],
        vec!["solve", "--m", "2", "--sign", "0", "--a", "0,0"],
        vec!["solve", "--m", "1", "--sign", "-1", "--a", "0"],
        vec!["solve", "--m", "2", "--sign", "-1", "--a", "0,0,0"],
        vec!["scan", "--m", "2", "--branch", "plus_c0", "--grid", "1:2"],
        vec!["frobnicate"],
    ] {
        let o = qcurv(dir.path(), &args);
        assert_eq!(code(&o), 64, "{args:?}");
    }
    let o = qcurv(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn volume_reports() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["volume", "--m", "2", "--sign", "+1", "--a", "5.950642552587727,-32"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(
        keys(&v),
        ["quad_part", "tail_upper", "tail_mode", "split_radius", "total", "rel_err", "ell_estimate"]
    );
    assert!((v["total"].as_f64().unwrap() / (64.0 * PI * PI) - 1.0).abs() < 5e-3);
    assert!(v["rel_err"].as_f64().unwrap() <= 5e-3);
    let file: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("volume.json")).unwrap()).unwrap();
    assert_eq!(file, v);

    let o = qcurv(dir.path(), &["volume", "--m", "2", "--sign", "-1", "--a", "-10,-8"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["total"].as_f64().unwrap() <= 4.49e-4);

    let o = qcurv(dir.path(), &["volume", "--m", "3", "--sign", "-1", "--a", "0,0,0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["ell_estimate"].as_f64().unwrap() < 0.0);
}

#[test]
fn volume_blow_up_reports_r_star() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["volume", "--m", "2", "--sign", "+1", "--a", "0,0"]);
    assert_eq!(code(&o), 2);
    let r_star = stdout_json(&o)["r_star"].as_f64().unwrap();
    assert!(r_star.is_finite() && r_star > 0.0);
}

#[test]
fn scan_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["scan", "--m", "2", "--sign", "-1", "--branch", "plus_c0", "--grid", "5:40:4"]);
    assert_eq!(code(&o), 0);
    let (header, rows) = read_csv(&dir.path().join("scan.csv"));
    assert_eq!(header, ["param", "total", "rel_err", "tail_mode", "ell_estimate", "outcome"]);
    assert_eq!(rows.len(), 4);
    let totals: Vec<f64> = rows.iter().map(|r| num(&r[1])).collect();
    assert!(totals.windows(2).all(|w| w[1] > w[0]), "{totals:?}");
    for r in &rows {
        num(&r[0]);
        num(&r[2]);
        num(&r[4]);
        assert_eq!(r[5], "GlobalToRmax");
    }

    let o = qcurv(
        dir.path(),
        &["--format", "json", "scan", "--m", "2", "--branch", "alpha", "--grid", "0.1:10:3"],
    );
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("scan.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(keys(&rows[0]), ["param", "total", "rel_err", "tail_mode", "ell_estimate", "outcome"]);
    let totals: Vec<f64> = rows.iter().map(|r| r["total"].as_f64().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[1] < w[0]), "{totals:?}");
}

#[test]
fn scan_flags_blow_up_rows() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["scan", "--m", "2", "--sign", "+1", "--branch", "plus_c0", "--grid", "0:0:1"]);
    assert_eq!(code(&o), 0);
    let (_, rows) = read_csv(&dir.path().join("scan.csv"));
    assert_eq!(rows[0][3], "Invalid");
    assert_eq!(rows[0][5], "BlowUp");
    assert_eq!(rows[0][1], "nan");
}

#[test]
fn shoot_default_path() {
    let dir = TempDir::new().unwrap();
    let hist = dir.path().join("hist.csv");
    let o = qcurv(
        dir.path(),
        &["shoot", "--m", "2", "--sign", "-1", "--target", "100", "--history", hist.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(
        keys(&v),
        ["found_data", "achieved_volume", "target_volume", "bracket_lo", "bracket_hi", "evaluations"]
    );
    let achieved = v["achieved_volume"].as_f64().unwrap();
    assert!((99.9..=100.1).contains(&achieved), "{achieved}");
    assert_eq!(v["found_data"].as_array().unwrap().len(), 2);
    let (header, rows) = read_csv(&hist);
    assert_eq!(header, ["param", "volume"]);
    assert_eq!(rows.len() as u64, v["evaluations"].as_u64().unwrap());
}

#[test]
fn shoot_alpha_family() {
    let dir = TempDir::new().unwrap();
    let target = 32.0 * PI * PI;
    let o = qcurv(dir.path(), &["shoot", "--family", "alpha", "--target", &target.to_string()]);
    assert_eq!(code(&o), 0);
    let achieved = stdout_json(&o)["achieved_volume"].as_f64().unwrap();
    assert!((achieved / target - 1.0).abs() <= 1e-3);
}

#[test]
fn shoot_bracketing_failure_exits_4() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("path.json");
    fs::write(&path, r#"{"m":2,"sign":"-1","vertices":[[0,-8],[0,-4]]}"#).unwrap();
    let o = qcurv(dir.path(), &["shoot", "--target", "1e9", "--path", path.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let v = stdout_json(&o);
    assert_eq!(v["table"].as_array().unwrap().len(), 9);
    assert!(v["error"].as_str().unwrap().contains("bracketing"));
}

#[test]
fn threshold_json() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["threshold", "--m", "2", "--a0", "5.950642552587727"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v["width"].as_f64().unwrap() <= 0.1);
    assert_eq!(v["lower_outcome"], "GlobalToRmax");
    assert_eq!(v["upper_outcome"], "BlowUp");
    assert_eq!(v["approximate"], true);
    let file: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("threshold.json")).unwrap()).unwrap();
    assert_eq!(file, v);
}

#[test]
fn verify_all_passes() {
    let dir = TempDir::new().unwrap();
    let o = qcurv(dir.path(), &["verify", "--suite", "all"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    let names: Vec<&str> = reports.iter().map(|r| r["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for r in reports {
        assert_eq!(keys(r), ["name", "passed", "worst_violation", "tolerance", "details"]);
        assert_eq!(r["passed"], true);
    }
    for suite in ["comparison", "barrier", "scaling", "conversion", "first-zero", "limit"] {
        assert!(names.iter().any(|n| n.starts_with(suite)), "{suite}");
    }
}

#[test]
fn outputs_are_byte_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = qcurv(dir.path(), &["scan", "--m", "3", "--branch", "minus_c0", "--grid", "0:10:3"]);
        assert_eq!(code(&o), 0);
        let o = qcurv(dir.path(), &["verify", "--suite", "comparison", "--seed", "7"]);
        assert_eq!(code(&o), 0);
    }
    for f in ["scan.csv", "verify.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_precedence() {
    let dir = TempDir::new().unwrap();
    let file_cfg = dir.path().join("file.json");
    let env_cfg = dir.path().join("env.json");
    fs::write(&file_cfg, r#"{"r_max":20.0}"#).unwrap();
    fs::write(&env_cfg, r#"{"r_max":10.0,"format":"json"}"#).unwrap();
    let solve = ["solve", "--m", "2", "--sign", "-1", "--a", "0,0"];
    let r_end = |o: &Output| stdout_json(o)["r_end"].as_f64().unwrap();

    let o = qcurv(dir.path(), &solve);
    assert_eq!(r_end(&o), 100.0);

    let mut args = vec!["--config", file_cfg.to_str().unwrap()];
    args.extend(solve);
    assert_eq!(r_end(&qcurv(dir.path(), &args)), 20.0);

    args.extend(["--rmax", "30"]);
    assert_eq!(r_end(&qcurv(dir.path(), &args)), 30.0);

    let with_env = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_qcurv"))
            .current_dir(dir.path())
            .env("QCURV_CONFIG", &env_cfg)
            .arg("--out-dir")
            .arg(dir.path())
            .args(extra)
            .output()
            .unwrap()
    };
    assert_eq!(r_end(&with_env(&solve)), 10.0);
    let mut over = vec!["--config", file_cfg.to_str().unwrap()];
    over.extend(solve);
    assert_eq!(r_end(&with_env(&over)), 20.0);

    let o = with_env(&["scan", "--m", "2", "--branch", "plus_c0", "--grid", "5:5:1"]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("scan.json").exists());

    fs::write(&file_cfg, r#"{"vol_tol":-1}"#).unwrap();
    let mut bad = vec!["--config", file_cfg.to_str().unwrap()];
    bad.extend(solve);
    assert_eq!(code(&qcurv(dir.path(), &bad)), 64);
}
