use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_davieskit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_tmp(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn identity_qubit_is_valid() {
    let out = run(&["validate-qubit", "--a", "0", "--c", "1", "--p", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["valid"], true);
    assert!(report["choi_min_eig"].as_f64().unwrap() > -1e-12);
    assert!(report["detailed_balance_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn c_bound_violation_is_named() {
    let out = run(&["validate-qubit", "--a", "0.6", "--c", "0.9", "--p", "0.25"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let failed: Vec<&str> = report["constraints"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["holds"] == false)
        .map(|c| c["constraint"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["0 <= c <= sqrt(1 - a/(1-p))"]);
}

#[test]
fn relaxation_times_outside_semigroup() {
    let out = run(&[
        "validate-qubit",
        "--tau1",
        "3",
        "--tau3",
        "1",
        "--w-eq",
        "-0.4",
        "--t",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let rows = report["constraints"].as_array().unwrap();
    let tau = rows
        .iter()
        .find(|c| c["constraint"] == "tau1 <= 2 tau3")
        .unwrap();
    assert_eq!(tau["holds"], false);
}

#[test]
fn rate_parameters_accepted() {
    let out = run(&[
        "validate-qubit",
        "--A",
        "1",
        "--gamma",
        "0.5",
        "--p",
        "0.25",
        "--t",
        "0.7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "validate-qubit",
        "--rate-a",
        "1",
        "--gamma",
        "0.4",
        "--p",
        "0.25",
        "--t",
        "0.7",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn incomplete_parameters_are_usage_errors() {
    assert_eq!(
        run(&["validate-qubit", "--a", "0.1"]).status.code(),
        Some(2)
    );
    let mixed = run(&[
        "validate-qubit",
        "--a",
        "0",
        "--c",
        "1",
        "--p",
        "0.3",
        "--t",
        "1",
    ]);
    assert_eq!(mixed.status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn region_grid_of_two() {
    let out = run(&["region", "--p", "0.5", "--grid", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a,c,valid,choi_min_eig,boundary");
    assert_eq!(lines.len(), 5);
    let coords: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expected = [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")];
    for (got, want) in coords.iter().zip(expected) {
        assert_eq!((got.0.as_str(), got.1.as_str()), want);
    }
}

#[test]
fn region_rows_revalidate() {
    let out = run(&["region", "--p", "0.3", "--grid", "41"]);
    for line in stdout(&out).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (a, c): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let valid = f[2] == "1";
        let expected = a <= 0.7 + 1e-12 && c <= (1.0 - a / 0.7).max(0.0).sqrt() + 1e-12;
        assert_eq!(valid, expected, "{line}");
    }
}

#[test]
fn region_output_is_deterministic() {
    let first = run(&["region", "--p", "0.5", "--grid", "33"]);
    let second = run(&["region", "--p", "0.5", "--grid", "33"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn moe_modes_agree() {
    let out = run(&[
        "moe", "--a", "0.1", "--c", "0.9", "--p", "0.25", "--mode", "both",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!(report["difference"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["analytic"]["case"], 3);
}

#[test]
fn moe_of_identity_channel_file() {
    let path = write_tmp(
        "identity_channel.json",
        r#"{"dim": 4, "re": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#,
    );
    let out = run(&["moe", "--channel", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!(report["numeric"]["entropy"].as_f64().unwrap().abs() < 1e-12);
    assert!(report["analytic"]["entropy"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(report["agree"], true);
}

#[test]
fn moe_of_dephased_channel_matches_columns() {
    let out = run(&[
        "moe", "--a", "0.4", "--c", "0", "--p", "0.3", "--mode", "numeric",
    ]);
    let report = json(&out);
    let numeric = report["numeric"]["entropy"].as_f64().unwrap();
    let columns = report["classical_min_column_entropy"].as_f64().unwrap();
    assert!((numeric - columns).abs() < 1e-9);
}

#[test]
fn moe_rejects_non_channel() {
    let path = write_tmp(
        "transpose.json",
        r#"{"dim": 2, "re": [[1,0,0,0],[0,0,1,0],[0,1,0,0],[0,0,0,1]]}"#,
    );
    let out = run(&["moe", "--channel", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn moe_scan_header_and_rows() {
    let out = run(&["moe", "--scan", "--p", "0.4", "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("a,c,p,valid,choi_min_eig,moe_analytic,moe_numeric,case")
    );
    assert_eq!(lines.count(), 25);
}

#[test]
fn evolve_trajectory() {
    let out = run(&[
        "evolve",
        "--tau1",
        "1",
        "--tau3",
        "2",
        "--w-eq",
        "-0.4",
        "--times",
        "0,1,2,1000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0], vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    let last = rows.last().unwrap();
    assert!((last[1] - 0.7).abs() < 1e-12 && last[2] < 1e-12);
    for r in &rows {
        let (a, c) = (r[1], r[2]);
        assert!(c <= (1.0 - a / 0.7).sqrt() + 1e-12);
    }
    // Φ(2) = Φ(1)∘Φ(1): a and c compose as 1 − a/(1−p) and c multiply
    let (one, two) = (&rows[1], &rows[2]);
    assert!((two[2] - one[2] * one[2]).abs() < 1e-15);
    assert!((two[4] - one[4] * one[4]).abs() < 1e-15);
}

#[test]
fn evolve_rejects_invalid_generator() {
    let out = run(&[
        "evolve", "--tau1", "3", "--tau3", "1", "--w-eq", "-0.4", "--times", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn qutrit_identity_case_is_davies() {
    let path = write_tmp(
        "qutrit_identity.json",
        r#"{"F": [[1,0,0],[0,1,0],[0,0,1]], "lambda": [1,1,1], "p": [0.2,0.3,0.5]}"#,
    );
    let out = run(&["validate-qutrit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["holds"], true);
}

#[test]
fn qutrit_second_ccp_inequality_fails() {
    let path = write_tmp(
        "qutrit_ccp_fail.json",
        &format!(
            r#"{{"F": [[1,0,0],[0,1,0],[0,0,1]], "lambda": [1,1,{}], "p": [0.2,0.3,0.5]}}"#,
            (-1.0f64).exp()
        ),
    );
    let out = run(&["validate-qutrit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["semigroup"]["holds"], true);
    assert_eq!(report["ccp"]["holds"], false);
    let scalar = &report["ccp"]["certificate"]["scalar"];
    assert!(scalar["trace_margin"].as_f64().unwrap() >= 0.0);
    assert!(scalar["quadratic_margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn qutrit_forward_constructed_case() {
    use davieskit::qutrit::{ClassicalGenerator, QutritDaviesParams};
    let p = [0.1, 0.3, 0.6];
    let g = ClassicalGenerator::detailed_balance(p, 0.7, 0.4, 0.9);
    let params = QutritDaviesParams::from_generator(&g, [2.9, 2.6, 3.1], p, 1.0).unwrap();
    let case = serde_json::json!({ "F": params.f.rows(), "lambda": params.lambdas });
    let path = write_tmp("qutrit_forward.json", &case.to_string());
    let out = run(&["validate-qutrit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let out = run(&["log-stochastic", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let recovered = &report["log"]["generator"];
    for i in 0..3 {
        for j in 0..3 {
            let x = recovered[i][j].as_f64().unwrap();
            assert!((x - g.matrix()[(i, j)]).abs() < 1e-9);
        }
    }
}

#[test]
fn qutrit_malformed_file() {
    let path = write_tmp(
        "qutrit_bad.json",
        r#"{"F": [[1,0],[0,1]], "lambda": [1,1,1]}"#,
    );
    assert_eq!(
        run(&["validate-qutrit", path.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["validate-qutrit", "/nonexistent/case.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn log_stochastic_of_cyclic_permutation() {
    let path = write_tmp(
        "qutrit_cyclic.json",
        r#"{"F": [[0,0,1],[1,0,0],[0,1,0]], "lambda": [1,1,1], "p": [0.2,0.3,0.5]}"#,
    );
    let out = run(&["log-stochastic", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["log_exists"]["ab_form"], false);
    assert!(report["log_error"].is_string());
}

#[test]
fn output_flag_writes_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("region_out.csv");
    let out = run(&[
        "region",
        "--p",
        "0.5",
        "--grid",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("a,c,valid,choi_min_eig,boundary\n"));
}
