use std::path::{Path, PathBuf};
use std::process::Command;

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn yosida(out: &Path, args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_yosida")).arg("--out").arg(out).args(args).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

#[test]
fn verify_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = yosida(dir.path(), &["verify", "--suite", "properties", "--op", "cube"]);
    assert_eq!(code, 0, "{text}");
    assert!(dir.path().join("verify_properties_cube.txt").exists());
}

#[test]
fn degree_prints_the_value() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = yosida(dir.path(), &["degree", "--map", "absxx-minus-x", "--interval", "-2", "2"]);
    assert_eq!(code, 0);
    assert!(text.starts_with("1\n"), "{text}");
}

#[test]
fn annulus_lists_both_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs().join("scalar.toml");
    let (code, text) = yosida(dir.path(), &["annulus", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.path().join("annulus_trace.csv")).unwrap();
    assert!(csv.starts_with("stage,t,eps,seed,x0,residual,iters\n"));
    let summary = std::fs::read_to_string(dir.path().join("annulus_summary.txt")).unwrap();
    assert!(summary.contains("[-1.00000") && summary.contains("[1.00000"), "{summary}");
}

#[test]
fn env_var_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs().join("parabolic_linear.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_yosida"))
        .env("YOSIDA_OUT_DIR", dir.path())
        .args(["parabolic", "--spec", spec.to_str().unwrap(), "--steps", "3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("parabolic_trajectory.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = yosida(dir.path(), &["--tol", "10", "degree", "--map", "identity", "--interval", "-1", "1"]);
    assert_eq!(code, 1);
    let (code, _) = yosida(dir.path(), &["degree", "--map", "constant", "--ball", "1", "--dim", "3"]);
    assert_eq!(code, 3);
    let missing = dir.path().join("missing.toml");
    let (code, _) = yosida(dir.path(), &["annulus", "--spec", missing.to_str().unwrap()]);
    assert_eq!(code, 1);
}
