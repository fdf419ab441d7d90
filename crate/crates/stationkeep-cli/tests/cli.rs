//! End-to-end tests of the command-line interface and its exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stationkeep"))
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper.json")
}

fn config_json() -> serde_json::Value {
    let text = std::fs::read_to_string(bundled_config()).expect("bundled config exists");
    serde_json::from_str(&text).expect("bundled config parses")
}

fn write_config(dir: &Path, v: &serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_bundled_config_short_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(bundled_config())
        .args(["--t-final", "0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(csv.starts_with("t,X,Y,Phi,Xe,Ye,Phie,tau1"));
    assert!(csv.contains("\r\n"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["controller_kind"], "adaptive-observer");
    let q_til = summary["metrics"]["q_tilde_final"].as_array().unwrap();
    assert_eq!(q_til.len(), 3);
    assert!(summary["certificates"].as_array().unwrap().len() >= 6);
    // the bundled vessel warns about B2
    assert!(stderr_of(&out).contains("B2"));
}

#[test]
fn simulate_tiny_horizon_still_logs_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(bundled_config())
        .args(["--t-final", "0.001", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let rows = csv.split("\r\n").filter(|l| !l.is_empty()).count();
    assert!(
        rows >= 3,
        "header plus at least two samples, got {rows} lines"
    );
}

#[test]
fn simulate_rejects_negative_frequency_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_json();
    cfg["exo"]["q"][1] = serde_json::json!(-1.0);
    let path = write_config(dir.path(), &cfg);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&path)
        .args(["--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("q[1]"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn simulate_rejects_unknown_controller() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(bundled_config())
        .args(["--controller", "bogus", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_oracle_diverges_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(bundled_config())
        .args([
            "--controller",
            "adaptive-oracle",
            "--dt",
            "0.001",
            "--t-final",
            "20",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("diverged"));
}

#[test]
fn simulate_accepts_reserved_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(bundled_config())
        .args(["--t-final", "0.01", "--seed", "42", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn certify_bundled_config_reports_and_gates() {
    // The bundled vessel makes the Proposition-1 definiteness clauses fail
    // (hard gate -> exit 3) while the PB identity and the Francis/Sigma
    // residuals pass; the JSON document carries all values.
    let out = bin()
        .args(["certify", "--config"])
        .arg(bundled_config())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let certs = doc["certificates"].as_array().unwrap();
    let prop1 = certs
        .iter()
        .find(|c| c["name"] == "passivity_p")
        .expect("prop1 present");
    let pb = prop1["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "pb_plus_ct_residual")
        .unwrap();
    assert!(pb["value"].as_f64().unwrap() < 1e-9);
    assert_eq!(pb["passed"], true);
    assert_eq!(prop1["passed"], false);
    let francis = certs
        .iter()
        .find(|c| c["name"] == "francis_equations")
        .unwrap();
    assert_eq!(francis["passed"], true);
    // delta0 reported under the observer certificate
    let obs = certs
        .iter()
        .find(|c| c["name"] == "observer_matrix")
        .unwrap();
    let d0 = obs["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "inertia_mismatch_delta0")
        .unwrap();
    assert!((d0["value"].as_f64().unwrap() - 5.0 / 7.0).abs() < 1e-12);
    assert!(stderr_of(&out).contains("passivity_p"));
}

#[test]
fn certify_passes_for_passivity_friendly_plant() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_json();
    cfg["vessel"]["m"] = serde_json::json!([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    cfg["vessel"]["d"] = serde_json::json!([[0, 0, 0], [0, 0, 0], [0, 0, 0]]);
    cfg["controller"]["k2"] = serde_json::json!([[2, 0, 0], [0, 2, 0], [0, 0, 2]]);
    cfg["controller"]["m_bar"] = serde_json::json!([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    let path = write_config(dir.path(), &cfg);
    let out = bin()
        .args(["certify", "--config"])
        .arg(&path)
        .args(["--out"])
        .arg(dir.path().join("certs"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    // delta0 = 0 for a matching nominal inertia
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let obs = doc["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "observer_matrix")
        .unwrap()
        .clone();
    let d0 = obs["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "inertia_mismatch_delta0")
        .unwrap()
        .clone();
    assert_eq!(d0["value"].as_f64().unwrap(), 0.0);
    assert!(dir.path().join("certs/certificates.json").is_file());
}

#[test]
fn certify_non_hurwitz_internal_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_json();
    // s^3 - 1 has a root at +1
    cfg["controller"]["char_poly"] = serde_json::json!([-1.0, 0.0, 0.0]);
    let path = write_config(dir.path(), &cfg);
    let out = bin()
        .args(["certify", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let im = &doc["certificates"].as_array().unwrap()[0];
    assert_eq!(im["name"], "internal_model_hurwitz");
    assert_eq!(im["passed"], false);
}

#[test]
fn sweep_kappa_writes_metrics_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_json();
    cfg["t_final"] = serde_json::json!(0.2);
    cfg["log_stride"] = serde_json::json!(200);
    let path = write_config(dir.path(), &cfg);
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&path)
        .args(["--param", "kappa", "--values", "50,100", "--out"])
        .arg(dir.path().join("sw"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("param,value,"));
    assert!(lines[1].starts_with("kappa,"));
}

#[test]
fn sweep_rejects_unknown_param_and_empty_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(bundled_config())
        .args(["--param", "mass", "--values", "1,2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["sweep", "--config"])
        .arg(bundled_config())
        .args(["--param", "kappa", "--values", "", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bundled_config_round_trips_and_matches_canonical() {
    let text = std::fs::read_to_string(bundled_config()).unwrap();
    let file = stationkeep::scenario::ScenarioFile::from_json(&text).unwrap();
    // normalize modulo key order: value-level comparison
    let reserialized: serde_json::Value = serde_json::from_str(&file.to_json_pretty()).unwrap();
    let original: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(reserialized, original);

    let canonical = stationkeep::scenario::Scenario::canonical();
    let parsed = file.into_scenario().unwrap();
    assert_eq!(parsed.exo.q, canonical.exo.q);
    assert_eq!(parsed.exo.w0, canonical.exo.w0);
    assert_eq!(parsed.x_r, canonical.x_r);
    assert_eq!(parsed.observer.kappa, canonical.observer.kappa);
    assert_eq!(parsed.vessel.m.data(), canonical.vessel.m.data());
    assert_eq!(parsed.vessel.d.data(), canonical.vessel.d.data());
    assert_eq!(parsed.dt, canonical.dt);
    assert_eq!(parsed.t_final, canonical.t_final);
}
