use std::fs::{self, File};
use std::io::{LineWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Algorithm, ExperimentConfig};
use crate::envs::{EnvKind, Environment};
use crate::error::{Error, Result};
use crate::policies::{save_policy, Policy, PolicyFamily};
use crate::stochastics::Rng;
use crate::trainers::{evaluate, ppo_train, EvalSummary, RunMetrics, SafeRpg, ValueFunction};

pub const CSV_HEADER: &str = "iteration,return,safety_rate,violations,safe_set_empty_events,wall_ms,seed,steps";

pub fn csv_row(m: &RunMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        m.iteration, m.episodic_return, m.safety_rate, m.violations, m.safe_set_empty_events, m.wall_ms, m.seed, m.steps
    )
}

/// Outcome of one seeded replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    pub rows: Vec<RunMetrics>,
    /// Noise-free evaluation of the policy before training.
    pub initial_eval: EvalSummary,
    /// Noise-free evaluation of the trained policy.
    pub final_eval: EvalSummary,
    pub csv_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub replications: Vec<Replication>,
    pub aggregate_path: PathBuf,
}

/// Mean and 95% normal-approximation interval across replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub mean: f64,
    pub ci95: f64,
}

impl Band {
    pub fn of(xs: &[f64]) -> Band {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let ci95 = if xs.len() < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            1.96 * (var / n).sqrt()
        };
        Band { mean, ci95 }
    }
}

#[derive(Debug, Serialize)]
struct AggregateRow {
    iteration: u64,
    replications: usize,
    #[serde(rename = "return")]
    episodic_return: Band,
    safety_rate: Band,
    violations: u64,
    safe_set_empty_events: u64,
}

#[derive(Debug, Serialize)]
struct FinalRow {
    replication: usize,
    seed: u64,
    initial_mean_return: f64,
    mean_return: f64,
    goal_fraction: f64,
    violations: u64,
    safe_set_empty_events: u64,
}

#[derive(Debug, Serialize)]
struct Aggregate<'a> {
    env: crate::envs::EnvKind,
    algorithm: Algorithm,
    seeds: &'a [u64],
    iterations: Vec<AggregateRow>,
    final_evaluation: Vec<FinalRow>,
    final_return: Band,
    final_goal_fraction: Band,
}

/// Runs every replication of `cfg`, writing one CSV per replication, an
/// aggregate JSON and, if enabled, policy checkpoints into `output_dir`.
///
/// CSV rows are flushed as they are produced, so a failing replication
/// leaves everything logged before the failure on disk.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml_string())?;
    let seeds = cfg.seeds();
    let mut reps = Vec::with_capacity(seeds.len());
    for (i, &seed) in seeds.iter().enumerate() {
        let rep = match cfg.env {
            EnvKind::Pendulum => replicate(&cfg.pendulum, cfg, i, seed)?,
            EnvKind::Quadcopter => replicate(&cfg.quadcopter, cfg, i, seed)?,
        };
        reps.push(rep);
    }
    let aggregate_path = cfg.output_dir.join("aggregate.json");
    let mut text = serde_json::to_string_pretty(&aggregate(cfg, &seeds, &reps))?;
    text.push('\n');
    fs::write(&aggregate_path, text)?;
    Ok(RunReport {
        replications: reps,
        aggregate_path,
    })
}

fn new_policy<E: Environment>(env: &E, cfg: &ExperimentConfig, rng: &mut Rng) -> Result<Policy> {
    let hidden = match cfg.algorithm {
        Algorithm::SafeRpg => &cfg.safe_rpg.hidden,
        _ => &cfg.ppo.hidden,
    };
    match cfg.mode().family() {
        PolicyFamily::BetaBox => Policy::beta(env.obs_dim(), env.action_dim(), hidden, rng),
        PolicyFamily::GaussianClipped => Policy::gaussian(env.obs_dim(), hidden, env.actuator_box(), rng),
    }
}

fn replicate<E: Environment>(env: &E, cfg: &ExperimentConfig, index: usize, seed: u64) -> Result<Replication> {
    let csv_path = cfg.output_dir.join(format!("replication_{index:02}_seed_{seed}.csv"));
    let mut out = LineWriter::new(File::create(&csv_path)?);
    writeln!(out, "{CSV_HEADER}")?;
    let mut io_err: Option<std::io::Error> = None;
    let mut write_row = |m: &RunMetrics| {
        if io_err.is_none() {
            if let Err(e) = writeln!(out, "{}", csv_row(m)) {
                io_err = Some(e);
            }
        }
    };

    let mut rng = Rng::new(seed);
    let mode = cfg.mode();
    let mut policy = new_policy(env, cfg, &mut rng)?;
    let initial_eval = evaluate(env, &policy, mode, cfg.eval_episodes, cfg.eval_seed)?;
    let rows = match cfg.algorithm {
        Algorithm::SafeRpg => {
            let mut rpg = SafeRpg::new(env, cfg.safe_rpg.clone())?;
            rpg.train(&mut policy, &mut rng, seed, cfg.wall_clock, &mut write_row)?
        }
        _ => {
            let mut value = ValueFunction::new(env.obs_dim(), &cfg.ppo.value_hidden, &mut rng)?;
            ppo_train(
                env,
                &mut policy,
                &mut value,
                mode,
                &cfg.ppo,
                cfg.iterations,
                &mut rng,
                seed,
                cfg.wall_clock,
                |it| write_row(&it.metrics),
            )?
        }
    };
    if let Some(e) = io_err {
        return Err(Error::Io(e));
    }
    let final_eval = evaluate(env, &policy, mode, cfg.eval_episodes, cfg.eval_seed)?;
    if cfg.checkpoints {
        save_policy(&checkpoint_stem(&cfg.output_dir, index, seed), &policy)?;
    }
    Ok(Replication {
        index,
        seed,
        rows,
        initial_eval,
        final_eval,
        csv_path,
    })
}

pub fn checkpoint_stem(dir: &Path, index: usize, seed: u64) -> PathBuf {
    dir.join(format!("policy_{index:02}_seed_{seed}"))
}

fn aggregate<'a>(cfg: &ExperimentConfig, seeds: &'a [u64], reps: &[Replication]) -> Aggregate<'a> {
    let mut iters: Vec<u64> = reps.iter().flat_map(|r| r.rows.iter().map(|m| m.iteration)).collect();
    iters.sort_unstable();
    iters.dedup();
    let iterations = iters
        .into_iter()
        .map(|it| {
            let at: Vec<&RunMetrics> = reps
                .iter()
                .filter_map(|r| r.rows.iter().find(|m| m.iteration == it))
                .collect();
            let ret: Vec<f64> = at.iter().map(|m| m.episodic_return).collect();
            let safe: Vec<f64> = at.iter().map(|m| m.safety_rate).collect();
            AggregateRow {
                iteration: it,
                replications: at.len(),
                episodic_return: Band::of(&ret),
                safety_rate: Band::of(&safe),
                violations: at.iter().map(|m| m.violations).sum(),
                safe_set_empty_events: at.iter().map(|m| m.safe_set_empty_events).sum(),
            }
        })
        .collect();
    let final_evaluation: Vec<FinalRow> = reps
        .iter()
        .map(|r| FinalRow {
            replication: r.index,
            seed: r.seed,
            initial_mean_return: r.initial_eval.mean_return,
            mean_return: r.final_eval.mean_return,
            goal_fraction: r.final_eval.goal_fraction,
            violations: r.final_eval.violations,
            safe_set_empty_events: r.final_eval.safe_set_empty_events,
        })
        .collect();
    let final_return = Band::of(&final_evaluation.iter().map(|f| f.mean_return).collect::<Vec<_>>());
    let final_goal_fraction = Band::of(&final_evaluation.iter().map(|f| f.goal_fraction).collect::<Vec<_>>());
    Aggregate {
        env: cfg.env,
        algorithm: cfg.algorithm,
        seeds,
        iterations,
        final_evaluation,
        final_return,
        final_goal_fraction,
    }
}
