//! End-to-end tests driving the `entcert` binary through its subcommands.

use std::path::Path;
use std::process::{Command, Output};

fn entcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_CONFIG: &str = r#"{
  "schema_version": 1,
  "d": 2,
  "state": {"kind": "mes"},
  "n_unitaries": 200,
  "n_events": 300,
  "seed": 42
}"#;

#[test]
fn run_produces_all_artifacts_and_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out_dir = dir.path().join("out");

    let output = entcert(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(
        stdout.contains("certified Schmidt number: 2"),
        "stdout: {stdout}"
    );

    for name in [
        "state.json",
        "dataset.json",
        "moments.json",
        "report.json",
        "boundary_r1.csv",
        "point.csv",
        "batches.csv",
        "histogram.csv",
    ] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);

    for out in ["a", "b"] {
        let out_dir = dir.path().join(out);
        let output = entcert(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()]);
        assert!(output.status.success());
    }
    for name in ["dataset.json", "moments.json", "report.json", "histogram.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn simulate_estimate_certify_chain_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let run_dir = dir.path().join("run");
    let chain_dir = dir.path().join("chain");

    assert!(entcert(&["run", "--config", &config, "--out", run_dir.to_str().unwrap()])
        .status
        .success());

    assert!(entcert(&[
        "simulate",
        "--config",
        &config,
        "--out",
        chain_dir.to_str().unwrap()
    ])
    .status
    .success());
    let moments = chain_dir.join("moments.json");
    assert!(entcert(&[
        "estimate",
        "--dataset",
        chain_dir.join("dataset.json").to_str().unwrap(),
        "--out",
        moments.to_str().unwrap()
    ])
    .status
    .success());
    let report = chain_dir.join("report.json");
    assert!(entcert(&[
        "certify",
        "--moments",
        moments.to_str().unwrap(),
        "--d",
        "2",
        "--out",
        report.to_str().unwrap()
    ])
    .status
    .success());

    // The staged subcommands replay exactly what the one-shot pipeline does.
    for name in ["dataset.json", "moments.json", "report.json"] {
        let from_run = std::fs::read(run_dir.join(name)).unwrap();
        let from_chain = std::fs::read(chain_dir.join(name)).unwrap();
        assert_eq!(from_run, from_chain, "{name} differs from pipeline output");
    }
}

#[test]
fn overrides_change_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let base = dir.path().join("base");
    let exact = dir.path().join("exact");

    assert!(entcert(&["simulate", "--config", &config, "--out", base.to_str().unwrap()])
        .status
        .success());
    let output = entcert(&[
        "simulate",
        "--config",
        &config,
        "--out",
        exact.to_str().unwrap(),
        "--exact",
    ]);
    assert!(output.status.success());
    assert!(String::from_utf8(output.stdout).unwrap().contains("exact correlators"));

    let a = std::fs::read(base.join("dataset.json")).unwrap();
    let b = std::fs::read(exact.join("dataset.json")).unwrap();
    assert_ne!(a, b, "--exact must drop the event sampling");

    // --exact and --events contradict each other and must be rejected by the
    // argument parser, not deep in the pipeline.
    let conflict = entcert(&[
        "simulate",
        "--config",
        &config,
        "--out",
        dir.path().join("c").to_str().unwrap(),
        "--exact",
        "--events",
        "100",
    ]);
    assert!(!conflict.status.success());
}

#[test]
fn missing_input_fails_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");

    let plain = entcert(&["certify", "--moments", missing.to_str().unwrap(), "--d", "3"]);
    assert!(!plain.status.success());
    assert!(String::from_utf8_lossy(&plain.stderr).contains("error:"));

    let json = entcert(&[
        "certify",
        "--error-json",
        "--moments",
        missing.to_str().unwrap(),
        "--d",
        "3",
    ]);
    assert!(!json.status.success());
    let stderr = String::from_utf8(json.stderr).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    let message = parsed["error"].as_str().unwrap();
    assert!(message.contains("nope.json"), "error should name the path: {message}");
}

#[test]
fn boundary_writes_one_csv_per_schmidt_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curves");
    let output = entcert(&["boundary", "--d", "4", "--out", out.to_str().unwrap()]);
    assert!(output.status.success());

    for r in 1..4 {
        let path = out.join(format!("boundary_r{r}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "s2,s4_min");
        assert!(lines.count() > 100, "curve r={r} is too sparse");
    }
    assert!(!out.join("boundary_r4.csv").exists());

    // Single-curve form.
    let single = dir.path().join("single");
    assert!(entcert(&["boundary", "--d", "4", "--r", "2", "--out", single.to_str().unwrap()])
        .status
        .success());
    assert!(single.join("boundary_r2.csv").exists());
    assert!(!single.join("boundary_r1.csv").exists());
}

#[test]
fn witness_reports_the_maximally_entangled_plateau() {
    let output = entcert(&["witness-dft", "--d", "5"]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("witness value = 2.00000"), "stdout: {stdout}");
    assert!(stdout.contains(">= 5"), "stdout: {stdout}");
}

#[test]
fn gen_state_output_feeds_witness() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    assert!(entcert(&["gen-state", "--d", "3", "--out", state.to_str().unwrap()])
        .status
        .success());

    let output = entcert(&["witness-dft", "--state", state.to_str().unwrap()]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("witness value = 2.00000"), "stdout: {stdout}");
    assert!(stdout.contains(">= 3"), "stdout: {stdout}");
}

#[test]
fn calibrate_reports_near_unit_factors_at_d2() {
    let output = entcert(&["calibrate", "--d", "2", "--samples", "4000", "--seed", "9"]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    let grab = |key: &str| -> f64 {
        stdout
            .split(&format!("{key} = "))
            .nth(1)
            .and_then(|rest| rest.split([',', '\n']).next())
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!((grab("kappa2") - 1.0).abs() < 0.05, "stdout: {stdout}");
    assert!((grab("kappa4") - 1.0).abs() < 0.05, "stdout: {stdout}");
}
