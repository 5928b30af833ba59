use serde::{Deserialize, Serialize};

use super::{deterministic_action, ActionMode};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policies::Policy;
use crate::stochastics::Rng;

/// Outcome of noise-free evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub returns: Vec<f64>,
    pub mean_return: f64,
    /// Fraction of episodes that entered the goal region at least once.
    pub goal_fraction: f64,
    pub steps: u64,
    pub violations: u64,
    pub safe_set_empty_events: u64,
}

/// Runs `episodes` full-length episodes with the distribution mean as the
/// action. Episode `i` starts from a reset drawn with `Rng::new(seed).derive(i)`.
pub fn evaluate<E: Environment>(
    env: &E,
    policy: &Policy,
    mode: ActionMode,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary> {
    let root = Rng::new(seed);
    let mut returns = Vec::with_capacity(episodes);
    let (mut steps, mut violations, mut empties, mut goals) = (0u64, 0u64, 0u64, 0usize);
    for ep in 0..episodes {
        let mut rng = root.derive(ep as u64);
        let mut s = env.reset(&mut rng);
        let mut total = 0.0;
        let mut reached = false;
        for _ in 0..env.episode_len() {
            let u = match deterministic_action(env, policy, mode, &s) {
                Ok(u) => u,
                Err(Error::SafeSetEmpty(_)) | Err(Error::Precondition(_)) => {
                    empties += 1;
                    break;
                }
                Err(e) => return Err(e),
            };
            let st = env.step(&s, &u);
            total += st.reward;
            reached |= st.reached_goal;
            steps += 1;
            if !env.is_safe(&st.next) {
                violations += 1;
            }
            s = st.next;
            if st.terminal {
                break;
            }
        }
        goals += reached as usize;
        returns.push(total);
    }
    let mean_return = returns.iter().sum::<f64>() / episodes.max(1) as f64;
    Ok(EvalSummary {
        returns,
        mean_return,
        goal_fraction: goals as f64 / episodes.max(1) as f64,
        steps,
        violations,
        safe_set_empty_events: empties,
    })
}
