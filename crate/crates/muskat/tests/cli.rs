//! End-to-end checks of the `muskat` binary: exit codes and output files.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn muskat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn small_run(scenario: &str, extra: &str) -> String {
    format!(
        r#"{{"n_points": 64, "gamma_count": 5, "delta": 1.5, "delta_c": 0.5, "dt": 5e-4,
            "t_final": 0.002, "scenario": {scenario}{extra}}}"#
    )
}

#[test]
fn even_gamma_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = small_run(r#"{"name": "flat"}"#, "").replace("\"gamma_count\": 5", "\"gamma_count\": 4");
    let cfg = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let out = muskat(&["--output-dir", out_dir.to_str().unwrap(), "run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.join("summary.json").exists());
}

#[test]
fn unknown_field_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_run(r#"{"name": "flat"}"#, r#", "bogus": 1"#));
    assert_eq!(muskat(&["run", &cfg]).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(muskat(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(muskat(&["stationary", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_spectral_passes() {
    let out = muskat(&["verify-spectral"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

#[test]
fn flat_run_completes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let extra = r#", "snapshot_every": 4, "evolve_w": true, "extension_y": [0.0]"#;
    let cfg = write_config(dir.path(), &small_run(r#"{"name": "flat"}"#, extra));
    let out = muskat(&["--threads", "1", "--output-dir", dir.path().to_str().unwrap(), "run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let s = summary(dir.path());
    assert_eq!(s["stop_reason"], "completed");
    assert_eq!(s["steps"], 4);
    assert_eq!(s["turnover"]["status"], "no_turnover");
    assert!(s["final_record"]["cr_residual"].as_f64().unwrap() < 1e-4);

    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,h5,arc,rt,margin,cr_residual,radius,z1,z1_speed,cond_sign"));
    assert_eq!(csv.lines().count(), 6);
    for name in ["z_gamma2_t4.csv", "w_gamma2_t4.csv", "extension_y0.csv"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn cusp_records_degenerate_turnover_and_exits_with_monitor_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_run(r#"{"name": "turnover", "a": 0.1, "b": 1.0}"#, ""));
    let out = muskat(&["--output-dir", dir.path().to_str().unwrap(), "run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let s = summary(dir.path());
    assert_eq!(s["stop_reason"], "margin_nonpositive");
    assert_eq!(s["turnover"]["status"], "degenerate");
    assert!(dir.path().join("diagnostics.csv").exists());
}

#[test]
fn unstable_scenario_runs_backward() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_run(r#"{"name": "unstable", "a": 0.1}"#, ""));
    let out = muskat(&["--output-dir", dir.path().to_str().unwrap(), "run", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["direction"], -1.0);
    assert!(s["t_reached"].as_f64().unwrap() < 0.0);
}

#[test]
fn stationary_subcommand_writes_residual_series() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"operator": "mode_rotation", "k0": 2.0, "n_points": 32, "f0_mode": 2,
                   "t_max": 0.1, "dt": 1e-3}"#;
    let cfg = write_config(dir.path(), body);
    let out = muskat(&["--output-dir", dir.path().to_str().unwrap(), "stationary", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("residual.csv")).unwrap();
    assert!(csv.starts_with("t,residual,h_k_norm"));
    assert_eq!(csv.lines().count(), 202);
    assert!(dir.path().join("stationary_summary.json").exists());
}
