use std::path::PathBuf;
use std::process::{Command, Output};

fn belldisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_belldisc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn assert_golden(args: &[&str], name: &str) {
    let out = belldisc(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        stdout(&out),
        golden(name),
        "output of {args:?} drifted from {name}"
    );
}

#[test]
fn sweep_csv_matches_golden_files() {
    assert_golden(
        &[
            "sweep",
            "--protocol",
            "hyper_momentum",
            "--sweep",
            "0:pi/2:8",
        ],
        "sweep_hyper_momentum.csv",
    );
    assert_golden(
        &["sweep", "--protocol", "timebin", "--sweep", "0:pi/2:16"],
        "sweep_timebin.csv",
    );
}

#[test]
fn run_and_table_csv_match_golden_files() {
    assert_golden(
        &[
            "run",
            "--protocol",
            "sfg",
            "--theta1",
            "0.3",
            "--theta2",
            "1.1",
            "--format",
            "csv",
        ],
        "run_sfg.csv",
    );
    assert_golden(&["table", "--format", "csv"], "table.csv");
}

#[test]
fn optimizer_csv_is_reproducible_for_a_seed() {
    assert_golden(
        &[
            "optimize",
            "--theta",
            "pi/4",
            "--budget",
            "2000",
            "--restarts",
            "4",
            "--seed",
            "7",
            "--format",
            "csv",
        ],
        "optimize_bell.csv",
    );
}

#[test]
fn hyper_oam_run_reports_one_half() {
    let out = belldisc(&["run", "--protocol", "hyper_oam", "--theta", "0.9"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let success = v["report"]["success_probability"].as_f64().unwrap();
    assert!((success - 0.5).abs() < 1e-12, "{success}");
    assert_eq!(v["verification"]["status"], "verified");
}

#[test]
fn sfg_run_reports_certain_success() {
    let out = belldisc(&[
        "run",
        "--protocol",
        "sfg",
        "--theta1",
        "0.3",
        "--theta2",
        "1.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let success = v["report"]["success_probability"].as_f64().unwrap();
    assert!((success - 1.0).abs() < 1e-12);
}

#[test]
fn timebin_at_quarter_pi_is_a_usage_error() {
    let out = belldisc(&[
        "run",
        "--protocol",
        "timebin",
        "--theta",
        "0.7853981633974483",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("π/4"));
}

#[test]
fn bad_configuration_exits_with_one() {
    for args in [
        &["run", "--protocol", "unknown", "--theta", "0.3"][..],
        &["run", "--protocol", "sfg", "--theta1", "0.3"],
        &["run", "--protocol", "baseline", "--theta", "2.0"],
        &[
            "run",
            "--protocol",
            "baseline",
            "--theta",
            "0.3",
            "--priors",
            "0.5,0.5",
        ],
        &[
            "run",
            "--protocol",
            "sfg",
            "--theta",
            "0.3",
            "--mode",
            "literal",
        ],
        &["sweep", "--protocol", "hyper_oam", "--sweep", "0:1:1"],
        &["table", "--format", "nope"],
        &["frobnicate"],
    ] {
        let out = belldisc(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_with_three() {
    let out = belldisc(&[
        "run",
        "--protocol",
        "baseline",
        "--theta",
        "0.5",
        "--out",
        "/nonexistent-dir/report.json",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(belldisc(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_rows_stay_inside_the_open_interval() {
    let out = belldisc(&["sweep", "--protocol", "timebin", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 64);
    for row in rows {
        let theta = row["theta"].as_f64().unwrap();
        assert!(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2);
        assert!((theta - std::f64::consts::FRAC_PI_4).abs() >= 1e-6);
    }
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-9);
}

#[test]
fn hyper_momentum_sweep_is_flat() {
    let out = belldisc(&["sweep", "--protocol", "hyper_momentum"]);
    let text = stdout(&out);
    let achieved: Vec<f64> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("max_abs_diff"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(achieved.len(), 64);
    assert!(achieved.iter().all(|a| (a - 0.5).abs() < 1e-9));
}

#[test]
fn table_rows_carry_cited_markers_and_fresh_values() {
    let out = belldisc(&["table", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&out)).unwrap();
    let row = |protocol: &str| {
        rows.iter()
            .find(|r| r["protocol"] == protocol)
            .unwrap_or_else(|| panic!("{protocol} row missing"))
    };
    let time = row("timebin")["bell_like_achieved"].as_f64().unwrap();
    assert!(time > 0.25 && time < 0.5, "{time}");
    let sfg = row("sfg");
    assert!((sfg["bell_like_achieved"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((sfg["bell_achieved"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let spatial = row("hyper_polarization");
    assert_eq!(spatial["system"], "Polarisation DOF");
    assert_eq!(spatial["ancillary"], "Spatial DOF");
    assert!((spatial["bell_like_achieved"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let text = stdout(&belldisc(&["table"]));
    assert!(text.contains("100% [cited]"));
}

#[test]
fn export_round_trips_through_the_circuit_schema() {
    let out = belldisc(&["export", "--protocol", "timebin", "--theta", "0.4"]);
    assert_eq!(out.status.code(), Some(0));
    let circuit = belldisc_core::circuits::Circuit::from_json(&stdout(&out)).unwrap();
    assert!(!circuit.is_empty());
}
