//! End-to-end checks of the command-line interface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn list_names_every_scenario() {
    let output = cqed(&["list"]);
    assert!(output.status.success());
    let text = stdout(&output);
    for id in [
        "pdc-weak-epr",
        "pdc-weak-evenodd",
        "pdc-weak-squeeze",
        "pdc-strong-epr",
        "pdc-strong-squeeze",
        "pdc-strong-cat",
        "puc-weak-swap",
        "puc-strong-swap",
        "validate-weak",
        "validate-strong",
        "dissipative-squeeze",
    ] {
        assert!(text.contains(id), "missing {id} in list output");
    }
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn run_writes_both_outputs_with_the_contract_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("series");
    let output = cqed(&["run", "validate-weak", "--out", out.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stdout(&output));
    let csv_path = out.join("validate-weak.csv");
    let json_path = out.join("validate-weak.json");
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("t_s,norm,p_survival_exact,p_survival_eff,var_x,var_p,epr_sum_var\n"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(json["config"]["scenario_id"], "validate-weak");
    assert!(json["summary"]["divergence"].as_f64().unwrap() < 0.10);
}

#[test]
fn repeated_runs_agree_except_for_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str| -> (String, serde_json::Value) {
        let out = dir.path().join(sub);
        let output = cqed(&["run", "dissipative-squeeze", "--out", out.to_str().unwrap()]);
        assert!(output.status.success());
        let csv = fs::read_to_string(out.join("dissipative-squeeze.csv")).unwrap();
        let mut json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("dissipative-squeeze.json")).unwrap())
                .unwrap();
        json["provenance"]["timestamp_unix_s"] = 0.into();
        (csv, json)
    };
    let (csv_a, json_a) = read("a");
    let (csv_b, json_b) = read("b");
    assert_eq!(csv_a, csv_b);
    assert_eq!(json_a, json_b);
}

#[test]
fn format_flag_selects_a_single_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("only-json");
    let output = cqed(&[
        "run",
        "dissipative-squeeze",
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(output.status.success());
    assert!(out.join("dissipative-squeeze.json").exists());
    assert!(!out.join("dissipative-squeeze.csv").exists());
}

#[test]
fn unknown_scenario_exits_with_the_config_code() {
    let output = cqed(&["run", "no-such-scenario"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_with_the_config_code() {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("bad-key.toml");
    fs::write(&path, "not_a_real_key = 1.0\n").unwrap();
    let output = cqed(&["run", "validate-weak", "--config", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(err.contains("not_a_real_key"), "stderr: {err}");
}

#[test]
fn compare_reports_a_divergence() {
    let output = cqed(&["compare", "validate-strong"]);
    assert!(output.status.success());
    let text = stdout(&output);
    let line = text
        .lines()
        .find(|l| l.starts_with("divergence"))
        .expect("divergence line");
    let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(value > 0.0 && value < 0.10, "divergence {value}");
}

#[test]
fn sweep_prints_one_line_per_value_and_writes_indexed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let output = cqed(&[
        "sweep",
        "dissipative-squeeze",
        "--vary",
        "tau",
        "--values",
        "2.5e-5,5e-5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("tau = 2.5e-5"));
    assert!(text.contains("tau = 5e-5"));
    assert!(out.join("dissipative-squeeze-sweep-000/dissipative-squeeze.csv").exists());
    assert!(out.join("dissipative-squeeze-sweep-001/dissipative-squeeze.json").exists());
}
