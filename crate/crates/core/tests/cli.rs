mod common;

use common::configs::config;
use pliouville::cli::{run, CliError, RunConfig};
use pliouville::io::Manifest;
use proptest::prelude::*;
use std::path::{Path, PathBuf};
use std::process::Command;

fn args(s: &str) -> Vec<String> {
    std::iter::once("pliouville".to_string())
        .chain(s.split_whitespace().map(String::from))
        .collect()
}

fn binary(cmd: &str, out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pliouville"))
        .args(cmd.split_whitespace())
        .arg("--out")
        .arg(out)
        .env_remove("PLIOUVILLE_OUT")
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn construct_writes_profile_result_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary(
        "construct --n 3 --p 2 --potential compact:r0=1,beta=4 --k 16",
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let result = json(dir.path().join("result.json"));
    assert!((result["alpha"].as_f64().unwrap() - 0.274_695_250_825_949_7).abs() < 1e-4);
    assert!((result["tail_constant"].as_f64().unwrap() - 0.535_316_624_296_403_8).abs() < 1e-4);
    let manifest = Manifest::read(dir.path()).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["config.json", "profile_k16.csv", "result.json"]);
    manifest.verify(dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("profile_k16.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,u,du,flux"));
    assert_eq!(csv.lines().count(), 1 + 16 * 256 + 1);
}

#[test]
fn zero_potential_gives_unit_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary("construct --n 3 --p 2 --potential zero --k 8", dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(dir.path().join("result.json"))["alpha"], 1.0);
}

#[test]
fn tampered_artifact_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    binary("construct --n 3 --p 2 --potential zero --k 2", dir.path());
    std::fs::write(dir.path().join("result.json"), b"{}").unwrap();
    assert!(Manifest::read(dir.path())
        .unwrap()
        .verify(dir.path())
        .is_err());
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cmd =
        "sweep --n 2 --p 1.5 --potential compact:r0=1,beta=4 --k-list 2,4,8 --grid-per-unit 32";
    binary(cmd, a.path());
    binary(&format!("{cmd} --jobs 3"), b.path());
    for f in [
        "sweep.json",
        "profile_k2.csv",
        "profile_k4.csv",
        "profile_k8.csv",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exit_codes_follow_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("construct --n 3 --p 2 --potential power:c=1,ell=-1 --k 4", 2),
        ("construct --n 3 --p 2 --potential compact:r0=1,gamma=4 --k 4", 2),
        ("sweep --n 3 --p 2 --potential zero --k 4", 2),
        ("construct --n 3 --p 2 --potential compact:r0=1,beta=4 --k 4 --picard-tol 0", 2),
        // Picard gets two iterations
        ("oracle-check --n 3 --p 2 --potential compact:r0=1,beta=4 --k 8 --picard-max-iter 2 --grid-per-unit 16", 3),
        // innermost ball r / 2^7 spans less than two cells
        ("decay --n 3 --p 2 --potential power:c=1,ell=1 --k 8 --grid-per-unit 16 --radius 8 --halvings 6", 2),
        ("sweep --n 3 --p 2 --potential compact:r0=1,beta=4 --k-list 2,4,8 --grid-per-unit 16 --shoot-tol 0.5", 4),
    ];
    for (cmd, code) in cases {
        let out = binary(cmd, dir.path());
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(code), "{cmd}: {stderr}");
        let err: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
        assert_eq!(err["error"]["exit_code"], code);
        if code == 4 {
            assert!(err["error"]["invariant"].is_string());
        }
    }
}

#[test]
fn failed_decay_bound_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    // four halvings from r = 32 reach radius 1, before b settles into its power law
    let out = binary(
        "decay --n 3 --p 2 --potential power:c=1,ell=1 --k 32 --grid-per-unit 64 --radius 32 --halvings 4",
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["invariant"], "decay_iteration");
    Manifest::read(dir.path())
        .unwrap()
        .verify(dir.path())
        .unwrap();
}

#[test]
fn env_var_overrides_out() {
    let (flag, env) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let status = Command::new(env!("CARGO_BIN_EXE_pliouville"))
        .args(
            args("construct --n 3 --p 2 --potential zero --k 2")
                .into_iter()
                .skip(1),
        )
        .arg("--out")
        .arg(flag.path())
        .env("PLIOUVILLE_OUT", env.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(env.path().join("manifest.json").exists());
    assert!(!flag.path().join("manifest.json").exists());
}

#[test]
fn single_term_flags_are_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    binary(
        "construct --n 3 --p 2 --potential compact:r0=1,beta=4 --k 4 --grid-per-unit 64",
        a.path(),
    );
    binary(
        "construct --n 3 --terms 1x2 --potential compact:r0=1,beta=4 --k 4 --grid-per-unit 64",
        b.path(),
    );
    for f in ["profile_k4.csv", "result.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn library_run_reports_usage_errors() {
    let cfg = RunConfig::parse_from(args("construct --n 3 --p 2 --potential zero --k 2")).unwrap();
    let bad = RunConfig { k: None, ..cfg };
    assert!(matches!(run(&bad), Err(CliError::Usage(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn config_round_trips(cfg in config()) {
        cfg.validate().unwrap();
        let parsed = RunConfig::parse_from(cfg.to_args()).unwrap();
        prop_assert_eq!(parsed, cfg);
    }
}
