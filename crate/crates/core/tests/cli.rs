//! End-to-end runs of the `transport-spectra` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_transport-spectra"));
    c.env_remove("TRANSPORT_SPECTRA_OUT");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(dir).args(args).output().unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn spectrum_writes_roots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--variant", "deadbeat-viscous", "--eta", "0.1", "--name", "db"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "db.csv");
    assert!(csv.lines().count() > 10);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "db.json")).unwrap();
    assert!(json.get("params").is_some());
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "db.manifest.json")).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert!(!manifest["argv"].as_array().unwrap().iter().any(|a| a == "--out"));
}

#[test]
fn replay_reproduces_outputs_byte_for_byte() {
    let first = tempfile::tempdir().unwrap();
    let args = ["margin", "--k1", "1", "--k2", "2", "--name", "m"];
    assert_eq!(run_in(first.path(), &args).status.code(), Some(0));
    let second = tempfile::tempdir().unwrap();
    let manifest = first.path().join("m.manifest.json");
    let out = run_in(second.path(), &["replay", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(first.path(), "m.json"), read(second.path(), "m.json"));
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("TRANSPORT_SPECTRA_OUT", dir.path())
        .args(["margin", "--matrix", "identity3", "--name", "id"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "id.json")).unwrap();
    let text = json.to_string();
    assert!(text.contains("rho2"), "{text}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["spectrum", "--variant", "deadbeat-viscous"][..],
        &["spectrum", "--variant", "nonsense"],
        &["margin", "--matrix", "1,2;3"],
        &["simulate", "--system", "viscous-pair", "--eta", "0"],
        &["spectrum", "--variant", "zform", "--eta", "0.1", "--window", "1,0,0,1"],
        &["frobnicate"],
    ] {
        let out = run_in(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn sweep_passes_and_simulate_reports_a_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--check", "theorem2", "--name", "t2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(read(dir.path(), "t2.csv").lines().count() == 6);

    let out = run_in(
        dir.path(),
        &["simulate", "--system", "viscous-pair", "--eta", "0.1", "--n", "128", "--name", "sim"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "sim.json")).unwrap();
    let rate = report["fit"]["rate"].as_f64().unwrap();
    let sigma = report["spectral"]["sigma_hat"]["sigma"].as_f64().unwrap();
    assert!((rate - sigma).abs() < 0.15 * sigma.abs(), "{rate} vs {sigma}");
    assert!(read(dir.path(), "sim.csv").starts_with("t,y,energy"));
}
