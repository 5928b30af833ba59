use std::fs;
use std::process::Command;

use safe_rpg::envs::EnvKind;
use safe_rpg::harness::{Algorithm, ExperimentConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_safe-rpg"))
}

const TINY: &str = r#"
env = "pendulum"
algorithm = "ppo_beta"
replications = 1
iterations = 2
eval_episodes = 1

[ppo]
buffer_size = 40
batch_size = 20
n_epochs = 1
hidden = [4]
value_hidden = [4]
"#;

#[test]
fn print_config_round_trips() {
    let out = bin().args(["print-config", "quadcopter", "ppo_gaussian"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg, ExperimentConfig::defaults(EnvKind::Quadcopter, Algorithm::PpoGaussian));
}

#[test]
fn usage_errors_exit_2() {
    let out = bin().args(["print-config", "cartpole", "ppo_beta"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["verify", "everything"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_replications_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, TINY).unwrap();
    let out = bin()
        .args(["run", path.to_str().unwrap(), "--replications", "0", "--output-dir"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replications"));
}

#[test]
fn run_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, TINY).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", path.to_str().unwrap(), "--seed", "9", "--replications", "2", "--output-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("replication_00_seed_9.csv").exists());
    assert!(out_dir.join("replication_01_seed_10.csv").exists());
    assert!(out_dir.join("aggregate.json").exists());
    assert!(out_dir.join("policy_01_seed_10.json").exists());
}

#[test]
fn verify_fast_suite_passes() {
    let out = bin().args(["verify", "normalization"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
