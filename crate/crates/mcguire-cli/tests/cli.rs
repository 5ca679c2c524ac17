//! End-to-end tests of the `mcguire` binary: output shapes, exit codes,
//! determinism, and the flag/config-file contract.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcguire"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("mcguire-cli-test-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).expect("temp file writable");
    path
}

/// One CSV record, parsed loosely (NaN included).
fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    let header = lines.next().expect("header line");
    assert_eq!(header, "x,t,re_g,im_g,err,theta_evals,det_order,converged");
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn csv_grid_has_header_and_sorted_rows() {
    let out = run(&["compute", "--x", "1.5,0.5,1.0", "--t", "0.5,0.25,1.0"]);
    assert!(out.status.success());
    let rows = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 9, "3x3 grid");
    let coords: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let mut sorted = coords.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(coords, sorted, "records ordered by (x, t)");
    for r in &rows {
        assert_eq!(r[7], "true", "every point converges on this grid");
    }
}

#[test]
fn json_output_is_deterministic_and_echoes_config() {
    let args = ["compute", "--x", "1.0", "--t", "0.5", "--format", "json", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "identical config, identical bytes");
    let doc: serde_json::Value = serde_json::from_str(&stdout(&a)).expect("valid json");
    assert_eq!(doc["config"]["c"], 2.0);
    assert_eq!(doc["config"]["seed"], 3);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    let results = doc["results"].as_array().expect("results array");
    assert_eq!(results.len(), 1);
    assert_eq!(results[0]["converged"], true);
    let re = results[0]["re_g"].as_f64().expect("finite re_g");
    assert!((re - 0.2794079936).abs() < 1e-5);
}

#[test]
fn flags_override_config_file() {
    let cfg = temp_file("override.json", r#"{"c": 3.0, "x": [2.0], "t": [9.9]}"#);
    let out = run(&[
        "compute",
        "--config",
        cfg.to_str().unwrap(),
        "--c",
        "2.0",
        "--t",
        "0.5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["config"]["c"], 2.0, "flag beats file");
    assert_eq!(doc["config"]["t"][0], 0.5, "flag grid beats file grid");
    assert_eq!(doc["config"]["x"][0], 2.0, "file value survives where no flag is given");
}

#[test]
fn invalid_configurations_exit_1() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["compute", "--x", "1", "--t", "0.5", "--tol", "2.0"],
        vec!["compute", "--t", "0.5"],
        vec!["compute", "--x", "1", "--t", "0.5", "--no-such-flag"],
        vec!["validate", "--only", "no-such-suite"],
        vec!["compute", "--x", "1", "--t", "0.5", "--mode", "finite-N-oracle"],
        vec!["compute", "--x", "1", "--t", "0.5", "--only", "norm-oracle"],
        vec!["compute", "--x", "1:2", "--t", "0.5"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
    let bad = temp_file("badkey.json", r#"{"x": [1.0], "bogus": 1}"#);
    let out = run(&["compute", "--config", bad.to_str().unwrap(), "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(1), "unknown config key");
}

#[test]
fn help_exits_0_and_lists_every_flag() {
    let out = run(&["compute", "--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for flag in [
        "--config", "--mode", "--x", "--t", "--c", "--kf", "--tol", "--threads", "--output",
        "--format", "--only", "--seed",
    ] {
        assert!(text.contains(flag), "help misses {flag}");
    }
    assert!(run(&["--help"]).status.success());
}

#[test]
fn origin_point_is_flagged_and_flushed() {
    let out = run(&["compute", "--x", "0,1", "--t", "0,0.5"]);
    assert_eq!(out.status.code(), Some(2), "non-convergence exit");
    let rows = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 4, "partial results still written");
    // (0, 0): the delta distribution has no value.
    assert_eq!(rows[0][2], "NaN");
    assert_eq!(rows[0][7], "false");
    // (1, 0): exactly zero, an exact statement.
    assert_eq!(rows[2][2], "0");
    assert_eq!(rows[2][3], "0");
    assert_eq!(rows[2][7], "true");
    // JSON renders the failed point's values as null.
    let out = run(&["compute", "--x", "0", "--t", "0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["results"][0]["re_g"].is_null());
    assert_eq!(doc["results"][0]["converged"], false);
}

#[test]
fn validate_only_runs_exactly_one_suite() {
    let out = run(&["validate", "--only", "appendix-sums"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("appendix-sums"));
    assert!(text.contains("1/1 suites passed"), "got:\n{text}");
    assert!(!text.contains("norm-oracle"));
}

#[test]
fn tightened_thresholds_fail_with_exit_3() {
    let cfg = temp_file("tight.json", r#"{"threshold_scale": 1e-9}"#);
    let out = run(&["validate", "--config", cfg.to_str().unwrap(), "--only", "norm-oracle"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn large_coupling_matches_infinite_c_mode() {
    let fin = run(&["compute", "--x", "1", "--t", "0.5", "--c", "10000", "--tol", "1e-7"]);
    let inf = run(&["compute", "--x", "1", "--t", "0.5", "--mode", "infinite-c", "--tol", "1e-7"]);
    assert!(fin.status.success() && inf.status.success());
    let f = &parse_csv(&stdout(&fin))[0];
    let i = &parse_csv(&stdout(&inf))[0];
    let (fr, fi): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
    let (ir, ii): (f64, f64) = (i[2].parse().unwrap(), i[3].parse().unwrap());
    let rel = ((fr - ir).powi(2) + (fi - ii).powi(2)).sqrt() / (ir * ir + ii * ii).sqrt();
    assert!(rel < 1e-3, "c=10^4 vs infinite-c differ by {rel:.2e}");
}

#[test]
fn oracle_mode_reports_states_and_shell_tail() {
    let cfg = temp_file(
        "oracle.json",
        r#"{"mode": "finite-N-oracle", "n_up": 2, "cutoff": 6, "x": [1.0], "t": [0.5]}"#,
    );
    let out = run(&["compute", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&stdout(&out));
    assert_eq!(rows[0][6], "0", "no determinant order in oracle mode");
    assert_eq!(rows[0][5], "286", "C(13, 3) enumerated states");
    let err: f64 = rows[0][4].parse().unwrap();
    assert!(err > 0.0, "shell tail heuristic reported");
    // An over-budget window is a configuration error, caught up front.
    let cfg = temp_file(
        "oracle-big.json",
        r#"{"mode": "finite-N-oracle", "n_up": 2, "cutoff": 6, "budget": 10, "x": [1.0], "t": [0.5]}"#,
    );
    let out = run(&["compute", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_flag_writes_the_file() {
    let mut path = std::env::temp_dir();
    path.push(format!("mcguire-cli-test-{}-out.csv", std::process::id()));
    let out = run(&["compute", "--x", "1", "--t", "0.5", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty(), "records go to the file, not stdout");
    let text = std::fs::read_to_string(&path).expect("file written");
    assert!(text.starts_with("x,t,re_g,im_g,err,theta_evals,det_order,converged\n"));
    let _ = std::fs::remove_file(&path);
}

#[test]
fn range_syntax_builds_inclusive_grids() {
    let out = run(&["compute", "--x", "0.5:1.5:3", "--t", "0.5", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let xs: Vec<f64> = doc["config"]["x"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(xs, vec![0.5, 1.0, 1.5]);
}
