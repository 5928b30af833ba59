use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::estq::est_q_tallied;
use super::{evaluate, select_action, ActionMode, PolicyActor, RunMetrics, SafetyTally};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::nets::ParamVector;
use crate::policies::{truncated_score, Policy, PolicyDensity};
use crate::stochastics::{geometric_sample, Rng};

/// Where each Safe-RPG trajectory starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    /// A fresh draw from the environment's reset distribution.
    Reset,
    /// The same state every iteration.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafeRpgConfig {
    pub gamma: f64,
    pub alpha0: f64,
    /// Stepsizes are `alpha0 / (1 + k)^stepsize_decay`.
    pub stepsize_decay: f64,
    /// Uniform draws for the normalization estimate (truncated Gaussian only).
    pub mc_samples: usize,
    pub max_iterations: u64,
    pub mode: ActionMode,
    pub hidden: Vec<usize>,
    pub start: StartState,
    pub max_rejection_attempts: usize,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub eval_seed: u64,
    /// Stop early once the evaluation return changes by less than 1e-3
    /// (relative) over this many iterations.
    pub plateau_window: Option<u64>,
}

impl Default for SafeRpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            alpha0: 3e-3,
            stepsize_decay: 0.6,
            mc_samples: 128,
            max_iterations: 2000,
            mode: ActionMode::BetaSafe,
            hidden: vec![4],
            start: StartState::Reset,
            max_rejection_attempts: 10_000,
            eval_every: 100,
            eval_episodes: 10,
            eval_seed: 1_000_003,
            plateau_window: None,
        }
    }
}

impl SafeRpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.alpha0 >= 0.0 && self.alpha0.is_finite()) {
            return bad(format!("alpha0 must be finite and non-negative, got {}", self.alpha0));
        }
        if !(self.stepsize_decay > 0.5 && self.stepsize_decay <= 1.0) {
            return bad(format!(
                "stepsize_decay must lie in (0.5, 1] so that the stepsizes sum to infinity while their squares do not; got {}",
                self.stepsize_decay
            ));
        }
        if self.mc_samples == 0 || self.max_rejection_attempts == 0 {
            return bad("mc_samples and max_rejection_attempts must be positive".into());
        }
        if !matches!(self.mode, ActionMode::BetaSafe | ActionMode::TruncatedGaussian) {
            return bad(format!("{:?} does not sample from the safe set", self.mode));
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive".into());
        }
        Ok(())
    }

    pub fn stepsize(&self, k: u64) -> f64 {
        self.alpha0 / (1.0 + k as f64).powf(self.stepsize_decay)
    }
}

/// One stochastic gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub q_hat: f64,
    pub score: ParamVector,
    pub stepsize: f64,
    /// `stepsize / (1 − γ) · q_hat · score`, already added to the parameters.
    pub update: ParamVector,
}

/// Safe random-horizon policy gradient.
#[derive(Debug, Clone)]
pub struct SafeRpg<'a, E: Environment> {
    env: &'a E,
    cfg: SafeRpgConfig,
    k: u64,
    tally: SafetyTally,
}

impl<'a, E: Environment> SafeRpg<'a, E> {
    pub fn new(env: &'a E, cfg: SafeRpgConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            env,
            cfg,
            k: 0,
            tally: SafetyTally::default(),
        })
    }

    pub fn config(&self) -> &SafeRpgConfig {
        &self.cfg
    }

    pub fn iterations_done(&self) -> u64 {
        self.k
    }

    /// Safety counts since the last call.
    pub fn take_tally(&mut self) -> SafetyTally {
        self.tally.take()
    }

    /// Runs one iteration and applies its update to `policy`.
    pub fn iteration(&mut self, policy: &mut Policy, rng: &mut Rng) -> Result<GradientEstimate> {
        if !policy.params().is_finite() {
            return Err(Error::NonFinite("policy parameters".into()));
        }
        let env = self.env;
        let cfg = &self.cfg;
        let actor = PolicyActor {
            policy,
            mode: cfg.mode,
            max_attempts: cfg.max_rejection_attempts,
        };
        let mut x = match &cfg.start {
            StartState::Reset => env.reset(rng),
            StartState::Fixed(v) => env.state_from_slice(v)?,
        };
        let horizon = geometric_sample(1.0 - cfg.gamma, rng)?;
        for _ in 0..horizon {
            let u = select_action(env, policy, cfg.mode, &x, rng, cfg.max_rejection_attempts)?.applied;
            let step = env.step(&x, &u);
            self.tally.record(env.is_safe(&step.next));
            if step.terminal {
                // Every action value of an absorbing state is zero.
                let n = policy.num_params();
                let stepsize = cfg.stepsize(self.k);
                self.k += 1;
                return Ok(GradientEstimate {
                    q_hat: 0.0,
                    score: ParamVector::new(vec![0.0; n]),
                    stepsize,
                    update: ParamVector::new(vec![0.0; n]),
                });
            }
            x = step.next;
        }
        let chosen = select_action(env, policy, cfg.mode, &x, rng, cfg.max_rejection_attempts)?;
        let q_hat = est_q_tallied(env, &actor, &x, &chosen.applied, cfg.gamma, rng, &mut self.tally)?;
        let score = match cfg.mode {
            ActionMode::BetaSafe => {
                // The Beta support is the sampling box itself, so no
                // truncation correction is needed.
                let mut g = vec![0.0; policy.num_params()];
                policy.accumulate_grad(&chosen.ev, &chosen.applied, &chosen.support, 1.0, 0.0, &mut g)?;
                ParamVector::new(g)
            }
            _ => {
                let set = chosen.safe_set.as_ref().expect("safe set for truncated mode");
                let base = PolicyDensity::new(policy, &env.observe(&x), chosen.support.clone())?;
                truncated_score(&base, &chosen.applied, set, cfg.mc_samples, rng)?.score
            }
        };
        let stepsize = cfg.stepsize(self.k);
        let scale = stepsize / (1.0 - cfg.gamma) * q_hat;
        let update: Vec<f64> = score.as_slice().iter().map(|s| scale * s).collect();
        if update.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("update at iteration {} (q_hat = {q_hat})", self.k)));
        }
        for (p, d) in policy.params_mut().iter_mut().zip(&update) {
            *p += d;
        }
        self.k += 1;
        Ok(GradientEstimate {
            q_hat,
            score,
            stepsize,
            update: ParamVector::new(update),
        })
    }

    /// Trains for `max_iterations`, logging an evaluation row at iteration 0,
    /// every `eval_every` iterations and at the end. Iterations whose safe
    /// set turns out empty are skipped and counted.
    pub fn train(
        &mut self,
        policy: &mut Policy,
        rng: &mut Rng,
        seed: u64,
        wall_clock: bool,
        mut on_row: impl FnMut(&RunMetrics),
    ) -> Result<Vec<RunMetrics>> {
        let start = Instant::now();
        let mut rows = Vec::new();
        let mut log = |this: &mut Self, policy: &Policy, rows: &mut Vec<RunMetrics>| -> Result<f64> {
            let ev = evaluate(this.env, policy, this.cfg.mode, this.cfg.eval_episodes, this.cfg.eval_seed)?;
            let t = this.take_tally();
            let row = RunMetrics {
                iteration: this.k,
                episodic_return: ev.mean_return,
                safety_rate: t.safety_rate(),
                violations: t.violations,
                safe_set_empty_events: t.empty_events,
                wall_ms: if wall_clock { start.elapsed().as_millis() as u64 } else { 0 },
                seed,
                steps: t.steps,
            };
            on_row(&row);
            rows.push(row);
            Ok(ev.mean_return)
        };
        let mut history = vec![(0u64, log(self, policy, &mut rows)?)];
        while self.k < self.cfg.max_iterations {
            match self.iteration(policy, rng) {
                Ok(_) => {}
                Err(Error::SafeSetEmpty(_)) => {
                    self.tally.empty_events += 1;
                    self.k += 1;
                }
                Err(e) => return Err(e),
            }
            if self.k % self.cfg.eval_every == 0 || self.k == self.cfg.max_iterations {
                let ret = log(self, policy, &mut rows)?;
                history.push((self.k, ret));
                if let Some(w) = self.cfg.plateau_window {
                    if let Some(&(_, old)) = history.iter().rev().find(|(k, _)| self.k - k >= w) {
                        if (ret - old).abs() <= 1e-3 * old.abs().max(1e-12) {
                            break;
                        }
                    }
                }
            }
        }
        Ok(rows)
    }
}
