//! End-to-end behavior of the `starkscat` binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starkscat")).args(args).output().expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn report_without_time(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn malformed_config_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "schema_version = 1\n[problem]\nepsilon = 1.5\n");
    let out = run(&["parabolic", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn unknown_keys_and_versions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "schema_version = 1\n[problem]\nmu = 2\n");
    assert_eq!(run(&["parabolic", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    write(&cfg, "schema_version = 9\n");
    let out = run(&["parabolic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));
}

#[test]
fn parabolic_passes_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&["parabolic", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    assert_eq!(
        report_without_time(&a.path().join("parabolic.json")),
        report_without_time(&b.path().join("parabolic.json"))
    );
    let ca = std::fs::read(a.path().join("parabolic_identities.csv")).unwrap();
    let cb = std::fs::read(b.path().join("parabolic_identities.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("x,y_norm,sum_residual,difference_residual,product_residual\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn zero_coupling_skips_the_singularity_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    write(&cfg, "schema_version = 1\n[potential]\nkappa = 0.0\n");
    let out = run(&["born-kernel", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = report_without_time(&dir.path().join("born-kernel.json"));
    let fit = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "singularity-fit").unwrap();
    assert_eq!(fit["status"], "skip");
    assert!(fit["detail"].as_str().unwrap().starts_with("skip: no singular part"));
}

#[test]
fn born_kernel_writes_kernel_and_fit_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&["born-kernel", "--out", out_dir]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let kernel = dir.path().join("kernel.csv");
    let text = std::fs::read_to_string(&kernel).unwrap();
    assert!(text.starts_with("s,ReT,ImT,|T|\n"));
    let refit = dir.path().join("refit");
    let out = run(&[
        "singularity-fit",
        "--input",
        kernel.to_str().unwrap(),
        "--pin",
        "-1.5",
        "--out",
        refit.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(refit.join("fit.json")).unwrap()).unwrap();
    let p = fit["exponent"].as_f64().unwrap();
    assert!((p + 1.5).abs() < 0.05, "{fit}");
    let im = fit["coeff_im"].as_f64().unwrap();
    assert!((im + (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 0.05 * 0.4, "{fit}");
    for key in ["coeff_re", "residual", "window"] {
        assert!(fit.get(key).is_some(), "{key} missing");
    }
}

#[test]
fn missing_kernel_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["singularity-fit", "--input", "/nonexistent/kernel.csv", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn orbit_command_reports_momenta() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["orbit", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("asymptotic_momenta.json")).unwrap()).unwrap();
    assert!(m["plus"]["tail_bound"].as_f64().unwrap() < 1e-6);
    assert!(dir.path().join("orbit.csv").exists());
}
