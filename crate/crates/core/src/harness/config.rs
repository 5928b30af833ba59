use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::{EnvKind, PendulumEnv, QuadEnv};
use crate::error::{Error, Result};
use crate::trainers::{ActionMode, PpoConfig, SafeRpgConfig};

/// Training algorithm and policy family of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SafeRpg,
    PpoBeta,
    PpoGaussian,
    PpoGaussianProjected,
}

impl Algorithm {
    /// How the PPO variants act; Safe-RPG takes its mode from its own block.
    pub fn ppo_mode(self) -> Option<ActionMode> {
        match self {
            Algorithm::SafeRpg => None,
            Algorithm::PpoBeta => Some(ActionMode::BetaSafe),
            Algorithm::PpoGaussian => Some(ActionMode::Gaussian),
            Algorithm::PpoGaussianProjected => Some(ActionMode::GaussianProjected),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safe_rpg" => Ok(Self::SafeRpg),
            "ppo_beta" => Ok(Self::PpoBeta),
            "ppo_gaussian" => Ok(Self::PpoGaussian),
            "ppo_gaussian_projected" => Ok(Self::PpoGaussianProjected),
            other => Err(format!(
                "unknown algorithm '{other}' (safe_rpg, ppo_beta, ppo_gaussian, ppo_gaussian_projected)"
            )),
        }
    }
}

/// Everything a run needs. Unset keys in a config file take the defaults of
/// the chosen environment and algorithm, see [`ExperimentConfig::defaults`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub algorithm: Algorithm,
    pub replications: usize,
    /// Replication `i` uses `seed + i` unless `seeds` lists them explicitly.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    pub output_dir: PathBuf,
    /// PPO iterations per replication. Safe-RPG uses `safe_rpg.max_iterations`.
    pub iterations: u64,
    /// Noise-free episodes scored after training.
    pub eval_episodes: usize,
    pub eval_seed: u64,
    /// Record elapsed milliseconds; off keeps outputs byte-reproducible.
    pub wall_clock: bool,
    pub checkpoints: bool,
    pub pendulum: PendulumEnv,
    pub quadcopter: QuadEnv,
    pub safe_rpg: SafeRpgConfig,
    pub ppo: PpoConfig,
}

impl ExperimentConfig {
    /// Defaults for one environment and algorithm, with the published
    /// hyperparameters for each case study.
    pub fn defaults(env: EnvKind, algorithm: Algorithm) -> Self {
        let mut ppo = PpoConfig::default();
        let mut quadcopter = QuadEnv::default();
        let mut iterations = 500;
        let mut replications = 5;
        let mut eval_episodes = 10;
        match (env, algorithm) {
            (_, Algorithm::SafeRpg) => {}
            (EnvKind::Pendulum, Algorithm::PpoBeta) => {
                ppo.policy_lr = 0.01;
                ppo.value_lr = 0.01;
            }
            (EnvKind::Pendulum, _) => {}
            (EnvKind::Quadcopter, alg) => {
                let beta = alg == Algorithm::PpoBeta;
                ppo = PpoConfig {
                    policy_lr: if beta { 6e-4 } else { 4e-4 },
                    value_lr: if beta { 6e-4 } else { 4e-4 },
                    entropy_coef: if beta { 0.0 } else { 1e-8 },
                    batch_size: 256,
                    buffer_size: if beta { 180 } else { 320 },
                    gamma: 0.9,
                    hidden: vec![256, 256],
                    value_hidden: vec![256, 256],
                    normalize_advantages: true,
                    max_grad_norm: Some(0.5),
                    ..PpoConfig::default()
                };
                quadcopter.episode_len = ppo.buffer_size;
                iterations = 600;
                replications = 6;
                eval_episodes = 20;
            }
        }
        Self {
            env,
            algorithm,
            replications,
            seed: 0,
            seeds: None,
            output_dir: PathBuf::from(format!("runs/{}_{}", env_name(env), alg_name(algorithm))),
            iterations,
            eval_episodes,
            eval_seed: 1_000_003,
            wall_clock: false,
            checkpoints: true,
            pendulum: PendulumEnv::default(),
            quadcopter,
            safe_rpg: SafeRpgConfig::default(),
            ppo,
        }
    }

    /// Parses a config file body. Only `env` and `algorithm` are required;
    /// every other key overrides the matching default.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e| Error::InvalidConfig(format!("{e}")))?;
        let pick = |key: &str| -> Result<String> {
            user.get(key)
                .and_then(|v| v.as_str())
                .map(str::to_owned)
                .ok_or_else(|| Error::InvalidConfig(format!("missing string key '{key}'")))
        };
        let env: EnvKind = pick("env")?.parse().map_err(Error::InvalidConfig)?;
        let algorithm: Algorithm = pick("algorithm")?.parse().map_err(Error::InvalidConfig)?;
        let mut merged = toml::Table::try_from(Self::defaults(env, algorithm))
            .map_err(|e| Error::InvalidConfig(format!("{e}")))?;
        merge(&mut merged, user);
        let cfg: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e| Error::InvalidConfig(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.replications as u64).map(|i| self.seed + i).collect(),
        }
    }

    /// Action mode the policies of this experiment are driven with.
    pub fn mode(&self) -> ActionMode {
        self.algorithm.ppo_mode().unwrap_or(self.safe_rpg.mode)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if let Some(s) = &self.seeds {
            if s.len() != self.replications {
                return bad(format!("{} seeds listed for {} replications", s.len(), self.replications));
            }
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes must be at least 1".into());
        }
        match self.env {
            EnvKind::Pendulum => self.pendulum.validate()?,
            EnvKind::Quadcopter => self.quadcopter.validate()?,
        }
        match self.algorithm {
            Algorithm::SafeRpg => self.safe_rpg.validate()?,
            _ => {
                self.ppo.validate()?;
                if self.iterations == 0 {
                    return bad("iterations must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn env_name(e: EnvKind) -> &'static str {
    match e {
        EnvKind::Pendulum => "pendulum",
        EnvKind::Quadcopter => "quadcopter",
    }
}

fn alg_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::SafeRpg => "safe_rpg",
        Algorithm::PpoBeta => "ppo_beta",
        Algorithm::PpoGaussian => "ppo_gaussian",
        Algorithm::PpoGaussianProjected => "ppo_gaussian_projected",
    }
}
