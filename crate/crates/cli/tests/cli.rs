use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn conebal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conebal")).args(args).output().expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of a CSV export, skipping the header comment and the column names.
fn csv_rows(path: impl AsRef<Path>) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

const CIRCLE: &str = r#"{"family": "circular_cone", "N": 256}"#;
const ELLIPSE: &str = r#"{"family": "perturbed_ellipse", "params": {"eps": 0.05, "k": 3}, "N": 512}"#;

#[test]
fn circle_report_has_constant_coefficients() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "circle.json", CIRCLE);
    let out = dir.path().join("out");
    let output = conebal(&["analyze", "--input", &input, "--outdir", out.to_str().unwrap()]);
    assert!(matches!(code(&output), 0 | 2), "{}", String::from_utf8_lossy(&output.stderr));
    let header = fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(header.starts_with("# N=256 orientation_flipped=true\nt,alpha,beta\n"));
    for row in csv_rows(out.join("coefficients.csv")) {
        assert!((row[1] - 0.5).abs() <= 1e-10);
        assert!(row[2].abs() <= 1e-10);
    }
    let report = read_json(out.join("monodromy.json"));
    assert_eq!(report["monodromy"]["tag"], "Ellipsoidal");
    assert_eq!(report["N"], 256);
    assert_eq!(report["orientation_flipped"], true);
    assert_eq!(report["config"]["seed"], conebal::RunConfig::default().seed);
}

#[test]
fn perturbed_ellipse_is_elliptic() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "ellipse.json", ELLIPSE);
    let out = dir.path().join("out");
    let output = conebal(&["analyze", "--input", &input, "--outdir", out.to_str().unwrap()]);
    assert!(matches!(code(&output), 0 | 2));
    let report = read_json(out.join("monodromy.json"));
    assert_eq!(report["monodromy"]["tag"], "Elliptic");
    let alpha_star = report["monodromy"]["alpha_star"].as_f64().unwrap();
    assert!(alpha_star < 0.5 && alpha_star > 0.4);
    // exit code 2 exactly when warnings were reported
    let warned = !report["warnings"].as_array().unwrap().is_empty();
    assert_eq!(code(&output), if warned { 2 } else { 0 });
}

#[test]
fn malformed_spec_exits_with_an_error_report() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "bad.json", r#"{"family": "circular_cone", "N": "#);
    let out = dir.path().join("out");
    let output = conebal(&["analyze", "--input", &input, "--outdir", out.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    let error = read_json(out.join("error.json"));
    assert_eq!(error["error"], "Json");
    assert!(error["message"].as_str().unwrap().contains("EOF"));
}

#[test]
fn non_convex_input_reports_its_error_code() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "wavy.json", r#"{"family": "perturbed_ellipse", "params": {"eps": 0.1, "k": 5}, "N": 256}"#);
    let out = dir.path().join("out");
    let output = conebal(&["analyze", "--input", &input, "--outdir", out.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    assert_eq!(read_json(out.join("error.json"))["error"], "MixedSign");
}

#[test]
fn nonpositive_tolerance_is_refused() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "circle.json", CIRCLE);
    let out = dir.path().join("out");
    let output = conebal(&["analyze", "--input", &input, "--outdir", out.to_str().unwrap(), "--tol-ode", "0"]);
    assert_eq!(code(&output), 1);
    assert!(read_json(out.join("error.json"))["message"].as_str().unwrap().contains("--tol-ode"));
}

#[test]
fn tolerance_overrides_reach_the_report() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "circle.json", CIRCLE);
    let out = dir.path().join("out");
    let args = ["analyze", "--input", &input, "--outdir", out.to_str().unwrap(), "--tol-class", "1e-6", "--seed", "42", "--grid", "128"];
    assert!(matches!(code(&conebal(&args)), 0 | 2));
    let report = read_json(out.join("monodromy.json"));
    assert_eq!(report["config"]["tolerances"]["class_trace"], 1e-6);
    assert_eq!(report["config"]["seed"], 42);
    assert_eq!(report["N"], 128);
}

#[test]
fn balanced_circle_has_no_sextactic_points() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "circle.json", CIRCLE);
    let out = dir.path().join("out");
    let output = conebal(&["balance", "--input", &input, "--outdir", out.to_str().unwrap()]);
    assert!(matches!(code(&output), 0 | 2), "{}", String::from_utf8_lossy(&output.stderr));
    let balanced = read_json(out.join("balanced.json"));
    assert_eq!(balanced["balanced"]["alpha_star"], 0.5);
    let sextactic = read_json(out.join("sextactic.json"));
    assert_eq!(sextactic["count"], 0);
    assert_eq!(sextactic["note"], "FlatBeta");
}

#[test]
fn recheck_reports_a_fixed_point() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "ellipse.json", ELLIPSE);
    let out = dir.path().join("out");
    let output = conebal(&["balance", "--input", &input, "--outdir", out.to_str().unwrap(), "--recheck"]);
    assert!(matches!(code(&output), 0 | 2), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("recheck: max |alpha - alpha*|"));
    let report = read_json(out.join("balanced.json"));
    assert!(report["recheck"]["alpha_deviation"].as_f64().unwrap() <= 1e-6);
    assert!(report["recheck"]["shift_deviation"].as_f64().unwrap() <= 1e-6);
    assert!(read_json(out.join("sextactic.json"))["count"].as_u64().unwrap() >= 6);
    let segments = fs::read_to_string(out.join("segments.csv")).unwrap();
    assert!(segments.lines().nth(1) == Some("i,s_start,s_end,length"));
}

#[test]
fn dual_report_meets_the_contract() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "ellipse.json", ELLIPSE);
    let out = dir.path().join("out");
    let output = conebal(&["dual", "--input", &input, "--outdir", out.to_str().unwrap()]);
    assert!(matches!(code(&output), 0 | 2), "{}", String::from_utf8_lossy(&output.stderr));
    let report = read_json(out.join("dual.json"));
    assert!(report["dual"]["pairing_defect"].as_f64().unwrap() <= 1e-8);
    for check in report["inequality"].as_array().unwrap() {
        assert!(check["max_value"].as_f64().unwrap() <= 1e-6);
    }
    assert_eq!(csv_rows(out.join("dual.csv")).len(), 512);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write_spec(dir.path(), "ellipse.json", ELLIPSE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        conebal(&["balance", "--input", &input, "--outdir", out.to_str().unwrap()]);
    }
    for name in ["monodromy.json", "balanced.json", "balanced.csv", "sextactic.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sign_error_in_the_pairing_fails_duality() {
    let dir = TempDir::new().unwrap();
    let q = write_spec(dir.path(), "q.json", "[[0, 0, 1], [0, 1, 0], [1, 0, 0]]");
    let out = dir.path().join("out");
    let output = conebal(&["verify", "--pairing", &q, "--outdir", out.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    let report = read_json(out.join("verify.json"));
    let duality = &report["criteria"][4];
    assert_eq!(duality["id"], 5);
    assert_eq!(duality["passed"], false);
}

#[test]
fn tightened_bounds_are_reported_as_failures() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let output = conebal(&["verify", "--bound", "1e-14", "--outdir", out.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    let report = read_json(out.join("verify.json"));
    assert_eq!(report["bound"], 1e-14);
    let failed = report["criteria"].as_array().unwrap().iter().filter(|c| c["passed"] == false).count();
    assert!(failed >= 3, "{failed}");
    assert!(String::from_utf8_lossy(&output.stdout).contains("FAIL"));
}
