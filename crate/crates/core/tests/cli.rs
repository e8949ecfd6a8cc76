use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qsv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsv")).args(args).output().expect("binary runs")
}

fn qsv_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsv"))
        .env("RAYON_NUM_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_rows(o: &Output) -> (Vec<String>, Vec<Vec<Value>>) {
    let v: Value = serde_json::from_str(&stdout(o)).unwrap();
    let cols = v["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().to_string()).collect();
    let rows = v["rows"].as_array().unwrap().iter().map(|r| r.as_array().unwrap().clone()).collect();
    (cols, rows)
}

fn column(cols: &[String], row: &[Value], name: &str) -> Value {
    row[cols.iter().position(|c| c == name).unwrap()].clone()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn ghz_gap_values() {
    let cases = [("3", "classes", 0.5), ("5", "naive", 16.0 / 81.0), ("3", "naive", 4.0 / 9.0)];
    for (n, scheme, nu) in cases {
        let o = qsv(&["gap", "--target", "ghz", "--n", n, "--protocol", "dpso", "--level", "1", "--scheme", scheme, "--format", "json"]);
        assert!(o.status.success());
        let (cols, rows) = json_rows(&o);
        let got = column(&cols, &rows[0], "nu").as_f64().unwrap();
        assert!((got - nu).abs() < 1e-10, "{n} {scheme}: {got}");
    }
}

#[test]
fn csv_has_header_and_metadata() {
    let o = qsv(&["gap", "--n", "3", "--seed", "17"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "target,n,protocol,level,scheme,nu,stderr,samples");
    assert_eq!(lines[lines.len() - 2], "# seed=17");
    assert!(lines[lines.len() - 1].starts_with("# version="));
}

#[test]
fn json_schema() {
    let o = qsv(&["complexity", "--nu", "0.5", "--level", "2", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "complexity");
    assert!(v["version"].is_string() && v["seed"].is_u64());
    let width = v["columns"].as_array().unwrap().len();
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row.as_array().unwrap().len(), width);
    }
}

#[test]
fn complexity_ratio_column() {
    let o = qsv(&["complexity", "--nu", "0.5", "--level", "2", "--epsilon", "0.01", "--format", "json"]);
    let (cols, rows) = json_rows(&o);
    let ratio: Vec<f64> = rows.iter().map(|r| column(&cols, r, "sop_dpso_ratio").as_f64().unwrap()).collect();
    assert!((ratio[0] - 1.0).abs() < 1e-3 && (ratio[1] - 4.0).abs() < 1e-3);
    for r in &rows {
        let plm = column(&cols, r, "n_plm").as_u64().unwrap();
        assert!(plm < column(&cols, r, "n_dpso").as_u64().unwrap());
    }
    // SOP has no gap on GHZ: its N is left empty rather than failing
    let o = qsv(&["complexity", "--target", "ghz", "--n", "3", "--format", "json"]);
    assert!(o.status.success());
    let (cols, rows) = json_rows(&o);
    assert!(column(&cols, &rows[0], "n_sop").is_null());
    assert!(column(&cols, &rows[0], "n_dpso").is_u64());
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = ["verify", "--target", "haar", "--n", "3", "--protocol", "sop", "--trials", "3000", "--seed", "5"];
    let a = qsv_threads(&args, "1");
    let b = qsv_threads(&args, "4");
    let c = qsv_threads(&args, "4");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let sweep = ["sweep", "--target", "haar", "--n", "4", "--samples", "4", "--seed", "2"];
    assert_eq!(qsv_threads(&sweep, "1").stdout, qsv_threads(&sweep, "3").stdout);
    let other = qsv(&["verify", "--target", "haar", "--n", "3", "--protocol", "sop", "--trials", "3000", "--seed", "6"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn verify_exit_codes() {
    let exact = qsv(&["verify", "--target", "ghz", "--n", "3", "--epsilon", "0.1", "--delta", "0.1"]);
    assert_eq!(exact.status.code(), Some(0));
    let (cols, rows) = json_rows(&qsv(&["verify", "--n", "3", "--format", "json"]));
    assert_eq!(column(&cols, &rows[0], "decision"), "accept");
    let worst = qsv(&["verify", "--target", "ghz", "--n", "3", "--scheme", "classes", "--epsilon", "0.3", "--device", "worst-case:0.3"]);
    assert_eq!(worst.status.code(), Some(1));
    let bad = qsv(&["verify", "--epsilon", "2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("epsilon"));
    assert_eq!(qsv(&["verify", "--protocol", "sop", "--target", "ghz"]).status.code(), Some(2));
    assert_eq!(qsv(&["verify", "--target", "nope"]).status.code(), Some(2));
    assert_eq!(qsv(&["gap", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn plm_verify() {
    let o = qsv(&["verify", "--target", "ghz", "--n", "3", "--protocol", "plm", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let o = qsv(&["verify", "--target", "ghz", "--n", "3", "--protocol", "plm", "--device", "worst-case:0.9", "--trials", "200"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"target": "ghz", "n": 5, "scheme": "naive", "format": "json"}"#);
    let (cols, rows) = json_rows(&qsv(&["gap", "--config", &cfg]));
    assert!((column(&cols, &rows[0], "nu").as_f64().unwrap() - 16.0 / 81.0).abs() < 1e-10);
    let (cols, rows) = json_rows(&qsv(&["gap", "--config", &cfg, "--n", "3"]));
    assert_eq!(column(&cols, &rows[0], "n"), 3);
    let bad = write(dir.path(), "bad.json", "{\n  \"n\": 3,\n  \"epsilon\": oops\n}\n");
    let o = qsv(&["verify", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let unknown = write(dir.path(), "unknown.json", r#"{"bogus": 1}"#);
    let o = qsv(&["gap", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn files_and_trial_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let log = dir.path().join("trials.csv");
    let o = qsv(&[
        "verify", "--n", "3", "--trials", "50", "--format", "json",
        "--out", out.to_str().unwrap(), "--trial-log", log.to_str().unwrap(),
    ]);
    assert!(o.status.code().is_some_and(|c| c < 2));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "verify");
    let log = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<&str> = log.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "trial_index,K,axes,z,shadow_axes,shadow_outcomes,omega_hat");
    assert_eq!(lines.len(), 51);
    assert!(log.lines().any(|l| l == "# seed=0"));
    // a density-matrix file as the device
    let rho = write(dir.path(), "rho.json", "[[[0.5,0],[0,0],[0,0],[0.5,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0.5,0],[0,0],[0,0],[0.5,0]]]");
    let o = qsv(&["verify", "--n", "2", "--device", &rho]);
    assert_eq!(o.status.code(), Some(0));
    let o = qsv(&["verify", "--n", "3", "--device", &rho]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ghz_check_and_hist() {
    let o = qsv(&["ghz-check", "--n", "6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let (cols, rows) = json_rows(&o);
    assert_eq!(rows.len(), (3..=6).map(|n| n - 1).sum::<usize>());
    assert!(rows.iter().all(|r| column(&cols, r, "match") == true));
    let o = qsv(&["hist", "--target", "haar", "--n", "3", "--samples", "20", "--bins", "5", "--format", "json"]);
    let (cols, rows) = json_rows(&o);
    assert_eq!(rows.len(), 5);
    let total: u64 = rows.iter().map(|r| column(&cols, r, "count").as_u64().unwrap()).sum();
    assert_eq!(total, 20);
}
