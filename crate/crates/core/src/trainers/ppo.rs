use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{select_action, ActionMode, Adam, RunMetrics, SafetyTally};
use crate::envs::Environment;
use crate::error::{check_dim, Error, Result};
use crate::nets::{HeadSpec, MlpSpec, OutputTransform, ParamVector};
use crate::policies::Policy;
use crate::safety::ActionBox;
use crate::stochastics::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub policy_lr: f64,
    pub value_lr: f64,
    pub clip_range: f64,
    pub entropy_coef: f64,
    pub batch_size: usize,
    /// Environment steps collected per iteration.
    pub buffer_size: usize,
    pub n_epochs: usize,
    pub gamma: f64,
    pub hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub normalize_advantages: bool,
    /// Rescale each minibatch gradient to at most this Euclidean norm.
    pub max_grad_norm: Option<f64>,
    pub max_rejection_attempts: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            policy_lr: 3e-4,
            value_lr: 3e-4,
            clip_range: 0.2,
            entropy_coef: 0.0,
            batch_size: 64,
            buffer_size: 300,
            n_epochs: 10,
            gamma: 0.99,
            hidden: vec![64, 64],
            value_hidden: vec![64, 64],
            normalize_advantages: false,
            max_grad_norm: None,
            max_rejection_attempts: 10_000,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.clip_range > 0.0) {
            return bad("clip_range must be positive");
        }
        if !(self.policy_lr > 0.0 && self.value_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.batch_size == 0 || self.buffer_size == 0 || self.n_epochs == 0 {
            return bad("batch_size, buffer_size and n_epochs must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.entropy_coef >= 0.0) {
            return bad("entropy_coef must be non-negative");
        }
        if matches!(self.max_grad_norm, Some(g) if !(g > 0.0)) {
            return bad("max_grad_norm must be positive");
        }
        Ok(())
    }
}

/// State-value network with a single linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub spec: MlpSpec,
    pub params: ParamVector,
}

impl ValueFunction {
    pub fn new(obs_dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self> {
        let spec = MlpSpec::with_hidden(obs_dim, hidden, vec![HeadSpec::new("value", 1, OutputTransform::Identity)])?;
        let params = spec.init_params(rng);
        Ok(Self { spec, params })
    }

    pub fn predict(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.spec.forward(self.params.as_slice(), obs)?[0])
    }
}

struct Sample {
    obs: Vec<f64>,
    raw: Vec<f64>,
    support: ActionBox,
    log_prob: f64,
    advantage: f64,
    target: f64,
}

/// Summary of one collect-and-update cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoIteration {
    pub metrics: RunMetrics,
    pub mean_abs_ratio_change: f64,
}

/// Applies one clipped-surrogate update for a minibatch and returns the
/// mean `|ρ − 1|`. Exposed to the tests through [`ppo_policy_gradient`].
fn policy_grad(policy: &Policy, batch: &[&Sample], cfg: &PpoConfig, grad: &mut [f64]) -> Result<f64> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = batch.len() as f64;
    let mut drift = 0.0;
    for s in batch {
        let ev = policy.evaluate(&s.obs)?;
        let logp = ev.log_prob(&s.raw, &s.support)?;
        let ratio = (logp - s.log_prob).exp();
        if !ratio.is_finite() {
            return Err(Error::NonFinite(format!(
                "probability ratio (log-prob {logp}, old {})",
                s.log_prob
            )));
        }
        drift += (ratio - 1.0).abs();
        let a = s.advantage;
        let active = if a >= 0.0 {
            ratio <= 1.0 + cfg.clip_range
        } else {
            ratio >= 1.0 - cfg.clip_range
        };
        let w = if active { ratio * a / n } else { 0.0 };
        if w != 0.0 || cfg.entropy_coef != 0.0 {
            policy.accumulate_grad(&ev, &s.raw, &s.support, w, cfg.entropy_coef / n, grad)?;
        }
    }
    Ok(drift / n)
}

/// Gradient of the minibatch objective `mean min(ρA, clip(ρ)A) + c·H` for
/// given old log-probabilities, actions and advantages.
pub fn ppo_policy_gradient(
    policy: &Policy,
    obs: &[Vec<f64>],
    raw: &[Vec<f64>],
    support: &[ActionBox],
    old_log_prob: &[f64],
    advantages: &[f64],
    cfg: &PpoConfig,
) -> Result<ParamVector> {
    let samples: Vec<Sample> = (0..obs.len())
        .map(|i| Sample {
            obs: obs[i].clone(),
            raw: raw[i].clone(),
            support: support[i].clone(),
            log_prob: old_log_prob[i],
            advantage: advantages[i],
            target: 0.0,
        })
        .collect();
    let refs: Vec<&Sample> = samples.iter().collect();
    let mut g = vec![0.0; policy.num_params()];
    policy_grad(policy, &refs, cfg, &mut g)?;
    Ok(ParamVector::new(g))
}

fn clip_norm(g: &mut [f64], max: Option<f64>) {
    if let Some(m) = max {
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > m {
            g.iter_mut().for_each(|v| *v *= m / norm);
        }
    }
}

/// Clipped-surrogate PPO with return-to-go advantages.
///
/// Each iteration collects `buffer_size` steps, then runs `n_epochs` passes
/// of minibatch Adam on the policy and the value function. Episodes carry
/// over between iterations and restart after `episode_len` steps, on a
/// terminal transition or when the safe set is empty. `on_iteration` sees
/// every logged row.
#[allow(clippy::too_many_arguments)]
pub fn ppo_train<E: Environment>(
    env: &E,
    policy: &mut Policy,
    value: &mut ValueFunction,
    mode: ActionMode,
    cfg: &PpoConfig,
    iterations: u64,
    rng: &mut Rng,
    seed: u64,
    wall_clock: bool,
    mut on_iteration: impl FnMut(&PpoIteration),
) -> Result<Vec<RunMetrics>> {
    cfg.validate()?;
    check_dim(env.obs_dim(), value.spec.input_dim())?;
    let start = Instant::now();
    let mut pol_opt = Adam::new(policy.num_params(), cfg.policy_lr);
    let mut val_opt = Adam::new(value.params.len(), cfg.value_lr);
    let mut state = env.reset(rng);
    let mut t_in_episode = 0usize;
    let mut episode_return = 0.0;
    let mut rows = Vec::with_capacity(iterations as usize);

    for it in 0..iterations {
        let mut tally = SafetyTally::default();
        let mut samples: Vec<Sample> = Vec::with_capacity(cfg.buffer_size);
        let mut rewards = Vec::with_capacity(cfg.buffer_size);
        let mut ends = Vec::with_capacity(cfg.buffer_size);
        let mut finished = Vec::new();
        while samples.len() < cfg.buffer_size {
            let chosen = match select_action(env, policy, mode, &state, rng, cfg.max_rejection_attempts) {
                Ok(c) => c,
                Err(Error::SafeSetEmpty(_)) | Err(Error::Precondition(_)) => {
                    // The safe set cannot be evaluated here: end the episode.
                    tally.empty_events += 1;
                    if let Some(last) = ends.last_mut() {
                        *last = true;
                    }
                    finished.push(episode_return);
                    state = env.reset(rng);
                    t_in_episode = 0;
                    episode_return = 0.0;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let step = env.step(&state, &chosen.applied);
            tally.record(env.is_safe(&step.next));
            episode_return += step.reward;
            t_in_episode += 1;
            samples.push(Sample {
                obs: env.observe(&state),
                raw: chosen.raw,
                support: chosen.support,
                log_prob: chosen.log_prob,
                advantage: 0.0,
                target: 0.0,
            });
            rewards.push(step.reward);
            let done = step.terminal || t_in_episode >= env.episode_len();
            ends.push(done);
            if done {
                finished.push(episode_return);
                state = env.reset(rng);
                t_in_episode = 0;
                episode_return = 0.0;
            } else {
                state = step.next;
            }
        }

        // Return-to-go, bootstrapped from the value estimate if the buffer
        // ends inside an episode.
        let mut running = if *ends.last().unwrap() {
            0.0
        } else {
            value.predict(&env.observe(&state))?
        };
        for i in (0..samples.len()).rev() {
            if ends[i] {
                running = 0.0;
            }
            running = rewards[i] + cfg.gamma * running;
            samples[i].target = running;
            samples[i].advantage = running - value.predict(&samples[i].obs)?;
        }
        if cfg.normalize_advantages && samples.len() > 1 {
            let n = samples.len() as f64;
            let m = samples.iter().map(|s| s.advantage).sum::<f64>() / n;
            let sd = (samples.iter().map(|s| (s.advantage - m).powi(2)).sum::<f64>() / n).sqrt();
            samples.iter_mut().for_each(|s| s.advantage = (s.advantage - m) / (sd + 1e-8));
        }

        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut pgrad = vec![0.0; policy.num_params()];
        let mut vgrad = vec![0.0; value.params.len()];
        let mut drift = 0.0;
        let mut batches = 0usize;
        for _ in 0..cfg.n_epochs {
            shuffle(&mut order, rng);
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
                drift += policy_grad(policy, &batch, cfg, &mut pgrad)?;
                batches += 1;
                // The optimizer minimizes, the surrogate is maximized.
                pgrad.iter_mut().for_each(|g| *g = -*g);
                clip_norm(&mut pgrad, cfg.max_grad_norm);
                pol_opt.descend(policy.params_mut(), &pgrad);

                vgrad.iter_mut().for_each(|g| *g = 0.0);
                let n = batch.len() as f64;
                for s in &batch {
                    let trace = value.spec.forward_trace(value.params.as_slice(), &s.obs)?;
                    let err = trace.output()[0] - s.target;
                    value
                        .spec
                        .backward_into(value.params.as_slice(), &trace, &[err], 2.0 / n, &mut vgrad)?;
                }
                clip_norm(&mut vgrad, cfg.max_grad_norm);
                val_opt.descend(value.params.as_mut_slice(), &vgrad);
            }
        }
        if !policy.params().is_finite() || !value.params.is_finite() {
            return Err(Error::NonFinite(format!("parameters after PPO iteration {it}")));
        }

        let ep_ret = if finished.is_empty() {
            episode_return
        } else {
            finished.iter().sum::<f64>() / finished.len() as f64
        };
        let metrics = RunMetrics {
            iteration: it,
            episodic_return: ep_ret,
            safety_rate: tally.safety_rate(),
            violations: tally.violations,
            safe_set_empty_events: tally.empty_events,
            wall_ms: if wall_clock { start.elapsed().as_millis() as u64 } else { 0 },
            seed,
            steps: tally.steps,
        };
        on_iteration(&PpoIteration {
            metrics: metrics.clone(),
            mean_abs_ratio_change: drift / batches.max(1) as f64,
        });
        rows.push(metrics);
    }
    Ok(rows)
}

/// Fisher–Yates shuffle driven by the run's generator.
fn shuffle(v: &mut [usize], rng: &mut Rng) {
    for i in (1..v.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        v.swap(i, j);
    }
}
