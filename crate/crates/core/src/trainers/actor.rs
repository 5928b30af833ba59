use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policies::{rejection_truncated_sample, DistEval, Policy, PolicyDensity, PolicyFamily};
use crate::safety::{ActionBox, SafeActionSet};
use crate::stochastics::Rng;

/// How a policy's distribution is turned into an applied action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    /// Beta scaled to the box of the safe set (its inner rectangle for
    /// halfspace sets).
    BetaSafe,
    /// Gaussian clipped to the fixed actuator box; ignores safety.
    Gaussian,
    /// Gaussian sample clipped onto the box of the safe set.
    GaussianProjected,
    /// Gaussian redrawn until it lands in the safe set.
    TruncatedGaussian,
}

impl ActionMode {
    pub fn family(self) -> PolicyFamily {
        match self {
            ActionMode::BetaSafe => PolicyFamily::BetaBox,
            _ => PolicyFamily::GaussianClipped,
        }
    }

    pub fn needs_safe_set(self) -> bool {
        self != ActionMode::Gaussian
    }
}

/// An action together with what a gradient step needs to know about it.
#[derive(Debug, Clone)]
pub struct SelectedAction {
    /// Action sent to the environment.
    pub applied: Vec<f64>,
    /// Draw whose density `log_prob` refers to.
    pub raw: Vec<f64>,
    /// Box the Beta distribution was scaled to; the clip box for Gaussians.
    pub support: ActionBox,
    pub log_prob: f64,
    pub ev: DistEval,
    pub safe_set: Option<SafeActionSet>,
}

fn gaussian_box(policy: &Policy) -> Result<ActionBox> {
    policy
        .clip_box()
        .cloned()
        .ok_or_else(|| Error::InvalidConfig("Gaussian modes need a Gaussian policy".into()))
}

/// Draws an action at state `s` according to `mode`.
pub fn select_action<E: Environment>(
    env: &E,
    policy: &Policy,
    mode: ActionMode,
    s: &E::State,
    rng: &mut Rng,
    max_attempts: usize,
) -> Result<SelectedAction> {
    if policy.family() != mode.family() {
        return Err(Error::InvalidConfig(format!("{mode:?} cannot drive a {:?} policy", policy.family())));
    }
    let obs = env.observe(s);
    let ev = policy.evaluate(&obs)?;
    let safe_set = if mode.needs_safe_set() {
        Some(env.safe_action_set(s)?)
    } else {
        None
    };
    let (applied, raw, support) = match mode {
        ActionMode::BetaSafe => {
            let bx = safe_set.as_ref().expect("safe set").sampling_box();
            let (u, raw) = policy.sample_from(&ev, &bx, rng)?;
            (u, raw, bx)
        }
        ActionMode::Gaussian => {
            let bx = gaussian_box(policy)?;
            let (u, raw) = policy.sample_from(&ev, &bx, rng)?;
            (u, raw, bx)
        }
        ActionMode::GaussianProjected => {
            let bx = gaussian_box(policy)?;
            let (_, raw) = policy.sample_from(&ev, &bx, rng)?;
            let u = safe_set.as_ref().expect("safe set").sampling_box().clip(&raw);
            (u, raw, bx)
        }
        ActionMode::TruncatedGaussian => {
            let bx = gaussian_box(policy)?;
            let set = safe_set.as_ref().expect("safe set");
            let base = PolicyDensity::new(policy, &obs, bx.clone())?;
            let u = rejection_truncated_sample(&base, |u| set.contains(u), rng, max_attempts)?;
            (u.clone(), u, bx)
        }
    };
    let log_prob = ev.log_prob(&raw, &support)?;
    Ok(SelectedAction {
        applied,
        raw,
        support,
        log_prob,
        ev,
        safe_set,
    })
}

/// Noise-free action: the distribution mean mapped into the same set the
/// stochastic action would be drawn from.
pub fn deterministic_action<E: Environment>(
    env: &E,
    policy: &Policy,
    mode: ActionMode,
    s: &E::State,
) -> Result<Vec<f64>> {
    let obs = env.observe(s);
    match mode {
        ActionMode::BetaSafe => policy.mean_action(&obs, &env.safe_action_set(s)?.sampling_box()),
        ActionMode::Gaussian => policy.mean_action(&obs, &gaussian_box(policy)?),
        ActionMode::GaussianProjected | ActionMode::TruncatedGaussian => {
            let m = policy.mean_action(&obs, &gaussian_box(policy)?)?;
            Ok(env.safe_action_set(s)?.sampling_box().clip(&m))
        }
    }
}

/// Gaussian sample clipped onto `h_c`.
pub fn projection_baseline_action(policy: &Policy, x: &[f64], h_c: &ActionBox, rng: &mut Rng) -> Result<Vec<f64>> {
    let bx = gaussian_box(policy)?;
    let ev = policy.evaluate(x)?;
    let (_, raw) = policy.sample_from(&ev, &bx, rng)?;
    Ok(h_c.clip(&raw))
}

/// Something that can pick an action inside the safe set of a state.
pub trait SafePolicy<E: Environment> {
    fn act(&self, env: &E, s: &E::State, rng: &mut Rng) -> Result<Vec<f64>>;
}

/// A policy paired with its action mode.
#[derive(Debug, Clone, Copy)]
pub struct PolicyActor<'a> {
    pub policy: &'a Policy,
    pub mode: ActionMode,
    pub max_attempts: usize,
}

impl<E: Environment> SafePolicy<E> for PolicyActor<'_> {
    fn act(&self, env: &E, s: &E::State, rng: &mut Rng) -> Result<Vec<f64>> {
        Ok(select_action(env, self.policy, self.mode, s, rng, self.max_attempts)?.applied)
    }
}

/// Uniform draws from the safe set, independent of any parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformActor;

impl<E: Environment> SafePolicy<E> for UniformActor {
    fn act(&self, env: &E, s: &E::State, rng: &mut Rng) -> Result<Vec<f64>> {
        env.safe_action_set(s)?.uniform_sample(rng)
    }
}
