use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cvsteg");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CVSTEG_NMAX_OVERRIDE").output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// The error record is the last stderr line; log warnings may precede it.
fn error_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn list_json_names_figures() {
    let out = run(&["list", "--json"]);
    assert!(out.status.success());
    let catalog: Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = catalog.as_array().unwrap();
    assert!(entries.len() >= 8);
    for e in entries {
        assert!(e["figure"].as_str().is_some_and(|f| f.starts_with("Fig")), "{e}");
        assert!(e["params"].is_array());
    }
}

#[test]
fn ef_margin_writes_curve_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ef-margin", "--output", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("ef_margin.csv"));
    assert_eq!(rows.len(), 37);
    assert!((rows[0][0] - 0.2).abs() < 1e-12 && (rows[36][0] - 2.0).abs() < 1e-12);
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2]), "gain shrinks with r");
    let m = manifest(dir.path());
    for key in ["experiment", "params", "seed", "version", "runtime_seconds", "n_max", "lost_mass", "files"] {
        assert!(m.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(m["seed"], 7);
    let db = m["results"]["delta_db"].as_f64().unwrap();
    assert!((db - 0.87).abs() < 0.01);
}

#[test]
fn cutoff_experiment_records_cutoff_and_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["tmsv-marginal", "--steps", "3", "--output", dir.path().to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert!(m["n_max"].as_u64().unwrap() > 0);
    assert!(m["lost_mass"].as_f64().unwrap() <= 1e-6);
    assert!(m["results"]["max_trace_distance"].as_f64().unwrap() < 1e-5);
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("tmsv_marginal.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn config_errors_exit_2_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["cat-teleport", "--eta", "1.5", "--channel", "wiretap", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let record = error_record(&out);
    assert_eq!(record["exit_code"], 2);
    assert!(dir.path().join("error.json").exists());

    let out = run(&["no-such-experiment"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["ef-margin", "--steps", "many", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cutoff_override_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["tmsv-marginal", "--output", dir.path().to_str().unwrap()])
        .env("CVSTEG_NMAX_OVERRIDE", "6")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let record = error_record(&out);
    assert_eq!(record["exit_code"], 3);
}

#[test]
fn replay_is_bit_identical() {
    let args = |dir: &Path| {
        vec![
            "cat-teleport".to_string(),
            "--shots".into(),
            "64".into(),
            "--channel".into(),
            "werner".into(),
            "--p".into(),
            "0.5".into(),
            "--points".into(),
            "21".into(),
            "--seed".into(),
            "11".into(),
            "--output".into(),
            dir.to_str().unwrap().into(),
        ]
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let out = Command::new(BIN).args(args(dir)).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["shots.csv", "wigner.csv"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    assert_eq!(manifest(a.path())["results"], manifest(b.path())["results"]);
}

#[test]
fn wigner_dump_grids() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["wigner-dump", "--state", "vacuum", "--points", "41", "--output", d]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("wigner.csv"));
    let peak = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert!(peak[0].abs() < 1e-12 && peak[1].abs() < 1e-12);
    assert!((peak[2] - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-6);

    let out = run(&["wigner-dump", "--state", "cat", "--points", "41", "--output", d]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("wigner.csv"));
    let origin = rows.iter().find(|r| r[0].abs() < 1e-12 && r[1].abs() < 1e-12).unwrap();
    let min = rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    assert!((origin[2] + 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-6);
    assert_eq!(min, origin[2]);
}

#[test]
fn teleported_cat_loses_negativity_at_half_transmission() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "wigner-dump",
        "--state",
        "teleported-cat",
        "--channel",
        "wiretap",
        "--eta",
        "0.5",
        "--shots",
        "2000",
        "--points",
        "81",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(manifest(dir.path())["results"]["wigner_min"].as_f64().unwrap() >= -1e-3);
}
