use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dlmg::critical_fields;
use serde_json::Value;

fn dlmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlmg")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

fn write_json(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const CAVITY_FILE: &str = r#"{"omega_0": 0.01, "lambda_a": 1.0, "lambda_b": 1.0, "kappa_a": 1.0, "delta_a": 100.0,
    "kappa_b": 1.0, "delta_b": 0.0, "n_atoms": 100}"#;

#[test]
fn params_on_bundled_estimates() {
    let o = dlmg(&["params", concat!(env!("CARGO_MANIFEST_DIR"), "/data/li6_ring_cavity.json")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let e = &v["effective"];
    assert!((e["gamma_a"].as_f64().unwrap() / 0.25 - 1.0).abs() < 0.02);
    assert!((e["gamma_b"].as_f64().unwrap() / 2.5 - 1.0).abs() < 0.02);
    assert_eq!(v["critical_fields"]["exists"], true);
    assert!(v["validity"].as_array().unwrap().len() > 3);
}

#[test]
fn params_missing_field_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = CAVITY_FILE.replace(r#""lambda_a": 1.0, "#, "");
    let path = write_json(dir.path(), "p.json", &text);
    let o = dlmg(&["params", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lambda_a"), "{}", stderr(&o));
}

#[test]
fn params_dissipation_dominated() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_json(dir.path(), "p.json", CAVITY_FILE);
    let o = dlmg(&["params", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["gamma_b_over_lambda"].as_f64().unwrap() > 1.0);
    assert_eq!(v["critical_fields"]["exists"], false);
}

#[test]
fn missing_file_is_io_error() {
    let o = dlmg(&["params", "/nonexistent/params.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(dlmg(&["scan", "--h-range", "0:1:1", "--outputs", "none"]).status.code(), Some(1));
    assert_eq!(dlmg(&["scan", "--outputs", "bogus"]).status.code(), Some(1));
    assert_eq!(dlmg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dlmg(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = dlmg(&["scan", "--outputs", "none", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn empty_selection_writes_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = dlmg(&["scan", "--outputs", "none", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(listing(dir.path()), ["manifest.json"]);
}

#[test]
fn scan_files_manifest_and_determinism() {
    let args = |out: &str| {
        vec![
            "scan".to_owned(),
            "--h-range".into(),
            "-0.2:1.2:8".into(),
            "--n".into(),
            "6,8".into(),
            "--outputs".into(),
            "moments,entanglement,eigenvalues,semiclassical".into(),
            "--jobs".into(),
            "1".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let argv = args(d.path().to_str().unwrap());
        let o = dlmg(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let names = listing(a.path());
    assert_eq!(
        names,
        [
            "bifurcation.csv",
            "eigenvalues.csv",
            "entanglement_N6.csv",
            "entanglement_N8.csv",
            "manifest.json",
            "steady_state_N6.csv",
            "steady_state_N8.csv"
        ]
    );
    for name in names.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }

    let header = fs::read_to_string(a.path().join("bifurcation.csv")).unwrap();
    assert!(header.starts_with("h_over_lambda,branch_id,x,y,z,stable,re_eig1,im_eig1,re_eig2,im_eig2"));
    let rows = fs::read_to_string(a.path().join("steady_state_N6.csv")).unwrap();
    assert_eq!(rows.lines().count(), 9);

    let m: Value = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    let cf = critical_fields(1.0, 0.2).unwrap();
    let got = &m["critical_fields"];
    assert!((got["h_minus"].as_f64().unwrap() - cf.h_minus).abs() <= 1e-12);
    assert!((got["h_plus"].as_f64().unwrap() - cf.h_plus).abs() <= 1e-12);
    assert!(m["version"].is_string());
    assert!(!m["timings"].as_array().unwrap().is_empty());
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = dlmg(&["scan", "--h-range", "0:1:3", "--outputs", "semiclassical", "--format", "json", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("bifurcation.json")).unwrap()).unwrap();
    assert!(v.is_array() || v.is_object());
}

#[test]
fn spectrum_and_evolve_to_stdout() {
    let o = dlmg(&["spectrum", "--h", "1.3,hc+", "--nu-range", "-2:2:41", "--refine", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("nu_over_lambda,transmission,status"));

    let o = dlmg(&["evolve", "--n", "6", "--h", "0.5", "--t-final", "2", "--samples", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 6);

    let o = dlmg(&["semiclassical", "--h-range", "-0.6:1.4:41"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("0.0101020"));
}
