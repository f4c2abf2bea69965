//! End-to-end runs of the `symhodge` binary.

use std::fs;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symhodge"))
}

#[test]
fn identities_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["identities", "--n", "2", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("identities.csv")).unwrap();
    assert!(csv.starts_with("n,identity,residual,bound,passed\n"));
    assert!(csv.lines().count() > 5);
    let js: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("identities.json")).unwrap()).unwrap();
    assert_eq!(js["experiment"], "identities");
    assert_eq!(js["passed"], true);
    assert_eq!(js["config"]["n"], 2);
    assert_eq!(js["rows"].as_array().unwrap().len(), csv.lines().count() - 1);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# harmonic study\nn = 2\nshapes = 5x4x4x4,9x8x8x8\nseed = 9\ncutoff = 1e-9\n").unwrap();
    let out = bin().args(["harmonic", "--print-config", "--seed", "4", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("experiment = harmonic"));
    assert!(text.contains("n = 2"));
    assert!(text.contains("shapes = 5x4x4x4,9x8x8x8"));
    assert!(text.contains("seed = 4"));
    assert!(text.contains("cutoff = 1e-9"));
    // the printed config reads back to the same text
    let again = dir.path().join("again.cfg");
    fs::write(&again, &text).unwrap();
    let out = bin().args(["harmonic", "--print-config", "--config"]).arg(&again).output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = bin().args(["identities", "--n", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n must be 1 or 2"));
    let out = bin().args(["harmonic", "--n", "1", "--shapes", "5x4x4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["identities", "--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_assertions_exit_with_one() {
    // a single shape pair that is too coarse for a clean refinement study is still a valid run;
    // asking for two identical shapes makes every growth assertion fail
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["harmonic", "--n", "1", "--shapes", "9x8,9x8", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAILED growing"));
    let js: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("harmonic.json")).unwrap()).unwrap();
    assert_eq!(js["passed"], false);
}

#[test]
fn repeated_runs_are_byte_identical() {
    // same config, including the output directory that the JSON records
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for _ in 0..2 {
        let out = bin().args(["poincare", "--n", "1", "--seed", "17", "--out"]).arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        seen.push((fs::read(dir.path().join("poincare.json")).unwrap(), fs::read(dir.path().join("poincare.csv")).unwrap()));
    }
    assert!(seen[0] == seen[1]);
}
