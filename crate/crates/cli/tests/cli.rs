//! End-to-end tests of the `wls` binary: output shapes, ordering,
//! reproducibility and exit codes.

use std::process::{Command, Output};

fn wls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = wls(args);
    assert!(
        out.status.success(),
        "wls {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8")
}

#[test]
fn classify_reference_point_row() {
    let out = stdout(&["classify", "--d", "3", "--beta", "-1", "--gamma", "-1"]);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "d,beta,gamma,admissible,region,n,alpha,nu,alpha_fs,beta_fs,c_star,k_star,lambda1"
    );
    let row = lines.next().unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[0], "3");
    assert_eq!(cells[3], "true");
    assert_eq!(cells[4], "symmetry_breaking");
    let lambda1: f64 = cells[12].parse().unwrap();
    assert!((lambda1 + 0.2679492).abs() < 1e-6);
}

#[test]
fn classify_accepts_n_alpha_form() {
    let a = stdout(&["classify", "--d", "3", "--beta", "-1", "--gamma", "-1"]);
    let b = stdout(&["classify", "--d", "3", "--n", "4", "--alpha", "1"]);
    assert_eq!(a, b);
}

#[test]
fn inadmissible_point_exits_with_code_2() {
    let out = wls(&["classify", "--d", "3", "--beta", "1.0", "--gamma", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    // the row is still emitted with empty derived columns
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains("false,inadmissible,,,,,,,"));
}

#[test]
fn scan_grid_order_and_reproducibility() {
    let args = [
        "scan",
        "--d",
        "3",
        "--beta-min",
        "-2",
        "--beta-max",
        "-1",
        "--beta-steps",
        "3",
        "--gamma-min",
        "-2",
        "--gamma-max",
        "-1",
        "--gamma-steps",
        "3",
    ];
    let a = stdout(&args);
    let b = stdout(&args);
    assert_eq!(a, b, "scan output must be reproducible bit-for-bit");
    let rows: Vec<&str> = a.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    // γ outer (slowest), β inner: first three rows share γ = −2
    for row in &rows[..3] {
        assert_eq!(row.split(',').nth(2).unwrap(), "-2.0000000000000000e0");
    }
    let beta_col: Vec<&str> = rows[..3]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(
        beta_col,
        vec![
            "-2.0000000000000000e0",
            "-1.5000000000000000e0",
            "-1.0000000000000000e0"
        ]
    );
}

#[test]
fn parallel_and_serial_scans_are_identical() {
    let args = [
        "scan",
        "--d",
        "3",
        "--beta-min",
        "-3",
        "--beta-max",
        "-0.5",
        "--beta-steps",
        "12",
        "--gamma-min",
        "-5",
        "--gamma-max",
        "2",
        "--gamma-steps",
        "12",
    ];
    let parallel = stdout(&args);
    let serial_out = Command::new(env!("CARGO_BIN_EXE_wls"))
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .expect("binary runs");
    assert!(serial_out.status.success());
    assert_eq!(parallel, String::from_utf8(serial_out.stdout).unwrap());
}

#[test]
fn scan_column_selection() {
    let out = stdout(&[
        "scan",
        "--d",
        "3",
        "--beta-min",
        "-2",
        "--beta-max",
        "-1",
        "--beta-steps",
        "2",
        "--gamma-min",
        "-2",
        "--gamma-max",
        "-1",
        "--gamma-steps",
        "2",
        "--columns",
        "beta,gamma,region",
    ]);
    assert_eq!(out.lines().next().unwrap(), "beta,gamma,region");
    assert_eq!(out.lines().count(), 5);
    // unknown columns are rejected as invalid parameters
    let bad = wls(&[
        "scan",
        "--d",
        "3",
        "--beta-min",
        "-2",
        "--beta-max",
        "-1",
        "--gamma-min",
        "-2",
        "--gamma-max",
        "-1",
        "--columns",
        "nope",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn json_output_carries_meta_and_rows() {
    let out = stdout(&[
        "constants",
        "--d",
        "3",
        "--beta",
        "-1",
        "--gamma",
        "-1",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(doc["meta"]["tool_version"].is_string());
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let c_star = rows[0]["c_star"].as_f64().unwrap();
    assert!((c_star + 5.2241714).abs() < 1e-6);
    let alt = rows[0]["c_star_alt"].as_f64().unwrap();
    assert!((c_star - alt).abs() < 1e-12);
}

#[test]
fn eigen_subcommand_reports_matching_values() {
    let out = stdout(&[
        "eigen",
        "--d",
        "3",
        "--beta",
        "-1",
        "--gamma",
        "-1",
        "--grid-size",
        "512",
        "--tol",
        "1e-4",
    ]);
    let row = out.lines().nth(1).unwrap();
    let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
    // lambda_numeric, lambda_formula, abs_diff, shift, error_estimate
    assert!((cells[1] - (3.0_f64.sqrt() - 2.0)).abs() < 1e-12);
    assert!(cells[2] < 1e-5);
    assert_eq!(cells[3], 3.0);
}

#[test]
fn deficit_of_the_optimizer_vanishes() {
    let out = stdout(&["deficit", "--d", "3", "--beta", "-1", "--gamma", "-1"]);
    let row = out.lines().nth(1).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    let norm: f64 = cells[0].parse().unwrap();
    let deficit: f64 = cells[3].parse().unwrap();
    assert!((norm - 1.0).abs() < 1e-9);
    assert!(deficit.abs() < 1e-9);
}

#[test]
fn flow_trace_header_and_monotone_entropy() {
    let out = stdout(&[
        "flow",
        "--d",
        "3",
        "--beta",
        "-1",
        "--gamma",
        "-1",
        "--variant",
        "ou",
        "--grid",
        "128",
        "--dt",
        "1e-2",
        "--t-end",
        "0.5",
        "--lq",
        "2,4",
    ]);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "t,mass,entropy,fisher,lq_2,lq_4");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 10);
    for w in rows.windows(2) {
        assert!(w[1][2] <= w[0][2] + 1e-10, "entropy must not increase");
    }
}

#[test]
fn ckn_limit_meta_reports_agreement() {
    let out = stdout(&[
        "ckn-limit",
        "--d",
        "3",
        "--beta",
        "-2.5",
        "--gamma",
        "-1",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let diff = doc["meta"]["abs_diff"].as_f64().unwrap();
    assert!(diff < 1e-4, "limit vs C* differ by {diff}");
}

#[test]
fn output_file_is_written() {
    let dir = std::env::temp_dir().join(format!("wls-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("point.csv");
    let _ = stdout(&[
        "classify",
        "--d",
        "3",
        "--beta",
        "-2.5",
        "--gamma",
        "-1",
        "--out",
        path.to_str().unwrap(),
    ]);
    let content = std::fs::read_to_string(&path).unwrap();
    assert!(content.lines().count() == 2);
    assert!(content.contains("symmetry"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn search_subcommand_certifies_breaking() {
    let out = stdout(&[
        "search",
        "--d",
        "3",
        "--beta",
        "-1",
        "--gamma",
        "-1",
        "--family",
        "eigenmode",
        "--budget",
        "120",
        "--seed",
        "4",
    ]);
    let row = out.lines().nth(1).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    let deficit: f64 = cells[0].parse().unwrap();
    assert!(deficit < 0.0);
    assert_eq!(cells[5], "certified_breaking");
}
