use super::{SafePolicy, SafetyTally};
use crate::envs::Environment;
use crate::error::{domain, Result};
use crate::stochastics::{geometric_sample, Rng};

/// Unbiased estimate of the discounted action value at `(x0, u0)`.
///
/// Draws a horizon `T ~ Geom(1 − √γ)` and sums `γ^{t/2} r_t` for `t ≤ T`
/// along a trajectory driven by `actor`.
pub fn est_q<E: Environment, P: SafePolicy<E>>(
    env: &E,
    actor: &P,
    x0: &E::State,
    u0: &[f64],
    gamma: f64,
    rng: &mut Rng,
) -> Result<f64> {
    est_q_tallied(env, actor, x0, u0, gamma, rng, &mut SafetyTally::default())
}

pub(crate) fn est_q_tallied<E: Environment, P: SafePolicy<E>>(
    env: &E,
    actor: &P,
    x0: &E::State,
    u0: &[f64],
    gamma: f64,
    rng: &mut Rng,
    tally: &mut SafetyTally,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain(format!("discount must lie in (0, 1), got {gamma}")));
    }
    let horizon = geometric_sample(1.0 - gamma.sqrt(), rng)?;
    run_estimate(env, actor, x0, u0, gamma, horizon, rng, tally)
}

/// [`est_q`] with the horizon `T` supplied by the caller.
pub fn est_q_with_horizon<E: Environment, P: SafePolicy<E>>(
    env: &E,
    actor: &P,
    x0: &E::State,
    u0: &[f64],
    gamma: f64,
    horizon: u64,
    rng: &mut Rng,
) -> Result<f64> {
    run_estimate(env, actor, x0, u0, gamma, horizon, rng, &mut SafetyTally::default())
}

#[allow(clippy::too_many_arguments)]
fn run_estimate<E: Environment, P: SafePolicy<E>>(
    env: &E,
    actor: &P,
    x0: &E::State,
    u0: &[f64],
    gamma: f64,
    horizon: u64,
    rng: &mut Rng,
    tally: &mut SafetyTally,
) -> Result<f64> {
    let root = gamma.sqrt();
    let mut x = x0.clone();
    let mut u = u0.to_vec();
    let mut q = 0.0;
    let mut weight = 1.0;
    for _ in 0..horizon {
        let step = env.step(&x, &u);
        q += weight * step.reward;
        weight *= root;
        tally.record(env.is_safe(&step.next));
        if step.terminal {
            // Absorbing state with zero reward from here on.
            return Ok(q);
        }
        x = step.next;
        u = actor.act(env, &x, rng)?;
    }
    Ok(q + weight * env.step(&x, &u).reward)
}
