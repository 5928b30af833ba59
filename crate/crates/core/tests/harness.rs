use std::fs;
use std::path::Path;

use safe_rpg::envs::{EnvKind, Environment, PendulumEnv, PendulumState};
use safe_rpg::harness::{checkpoint_stem, run, Algorithm, ExperimentConfig, CSV_HEADER};
use safe_rpg::policies::load_policy;

fn small(env: EnvKind, alg: Algorithm, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(env, alg);
    cfg.output_dir = dir.to_path_buf();
    cfg.replications = 2;
    cfg.seed = 41;
    cfg.iterations = 3;
    cfg.eval_episodes = 2;
    cfg.ppo.buffer_size = 60;
    cfg.ppo.batch_size = 30;
    cfg.ppo.n_epochs = 2;
    cfg.ppo.hidden = vec![8];
    cfg.ppo.value_hidden = vec![8];
    cfg.safe_rpg.max_iterations = 20;
    cfg.safe_rpg.eval_every = 10;
    cfg.safe_rpg.eval_episodes = 2;
    cfg
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn ppo_run_writes_csvs_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(EnvKind::Pendulum, Algorithm::PpoBeta, dir.path());
    let report = run(&cfg).unwrap();
    assert_eq!(report.replications.len(), 2);
    for (i, rep) in report.replications.iter().enumerate() {
        assert_eq!(rep.seed, 41 + i as u64);
        let text = fs::read_to_string(&rep.csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 3);
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row[0], k.to_string());
            assert_eq!(row[2], "1", "Beta policies never leave the safe set");
            assert_eq!(row[3], "0");
            assert_eq!(row[4], "0");
            assert_eq!(row[5], "0");
            assert_eq!(row[6], rep.seed.to_string());
            assert_eq!(row[7], "60");
        }
        assert!(!text.contains('\r'));
    }
    let agg: serde_json::Value = serde_json::from_slice(&fs::read(&report.aggregate_path).unwrap()).unwrap();
    let iters = agg["iterations"].as_array().unwrap();
    assert_eq!(iters.len(), 3);
    let mean0: f64 = report
        .replications
        .iter()
        .map(|r| r.rows[0].episodic_return)
        .sum::<f64>()
        / 2.0;
    assert!((iters[0]["return"]["mean"].as_f64().unwrap() - mean0).abs() < 1e-9);
    assert_eq!(agg["final_evaluation"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn reruns_are_byte_identical() {
    for alg in [Algorithm::PpoBeta, Algorithm::PpoGaussian, Algorithm::SafeRpg] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let cfg = small(EnvKind::Pendulum, alg, &out);
        run(&cfg).unwrap();
        let first = read_dir_sorted(&out);
        fs::remove_dir_all(&out).unwrap();
        run(&cfg).unwrap();
        let second = read_dir_sorted(&out);
        // Two CSVs, two checkpoints of two files each, the aggregate and the config.
        assert_eq!(first.len(), 8);
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a.0, b.0);
            assert!(a.1 == b.1, "{alg:?}: {} differs", a.0);
        }
    }
}

#[test]
fn different_seeds_differ() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = small(EnvKind::Pendulum, Algorithm::PpoBeta, a.path());
    let mut other = small(EnvKind::Pendulum, Algorithm::PpoBeta, b.path());
    other.seeds = Some(vec![5, 6]);
    let ra = run(&cfg).unwrap();
    let rb = run(&other).unwrap();
    assert_ne!(ra.replications[0].rows, rb.replications[0].rows);
}

#[test]
fn safe_rpg_logs_at_evaluation_points() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small(EnvKind::Pendulum, Algorithm::SafeRpg, dir.path())).unwrap();
    for rep in &report.replications {
        let its: Vec<u64> = rep.rows.iter().map(|m| m.iteration).collect();
        assert_eq!(its, vec![0, 10, 20]);
        assert!(rep.rows.iter().all(|m| m.violations == 0 && m.safe_set_empty_events == 0));
    }
}

#[test]
fn checkpoints_reload_to_the_trained_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(EnvKind::Pendulum, Algorithm::PpoBeta, dir.path());
    let report = run(&cfg).unwrap();
    let rep = &report.replications[1];
    let policy = load_policy(&checkpoint_stem(dir.path(), 1, rep.seed)).unwrap();
    let env = PendulumEnv::default();
    let s = PendulumState { theta: 0.2, theta_dot: -0.3 };
    let bx = env.safe_action_set(&s).unwrap().sampling_box();
    let u = policy.mean_action(&env.observe(&s), &bx).unwrap();
    assert!(bx.contains(&u, 0.0));
    let ev = safe_rpg::trainers::evaluate(&env, &policy, cfg.mode(), cfg.eval_episodes, cfg.eval_seed).unwrap();
    assert_eq!(ev, rep.final_eval);
}

#[test]
fn quadcopter_run_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(EnvKind::Quadcopter, Algorithm::PpoBeta, dir.path());
    cfg.replications = 1;
    let report = run(&cfg).unwrap();
    let rows = &report.replications[0].rows;
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|m| m.violations == 0 && m.safe_set_empty_events == 0));
}

#[test]
fn invalid_config_is_rejected_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let mut cfg = small(EnvKind::Pendulum, Algorithm::PpoBeta, &out);
    cfg.replications = 0;
    assert!(matches!(run(&cfg), Err(safe_rpg::Error::InvalidConfig(_))));
    assert!(!out.exists());
}
