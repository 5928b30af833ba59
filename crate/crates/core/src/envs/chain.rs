use super::{Environment, Step};
use crate::error::{check_dim, domain, Result};
use crate::safety::{ActionBox, SafeActionSet};
use crate::stochastics::Rng;

/// Deterministic chain whose reward depends only on the state. The action is
/// ignored, which makes action values computable by value iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub rewards: Vec<f64>,
    pub next: Vec<usize>,
    /// Entering one of these states ends the episode.
    pub terminal_states: Vec<usize>,
}

impl Chain {
    pub fn new(rewards: Vec<f64>, next: Vec<usize>) -> Self {
        Self {
            rewards,
            next,
            terminal_states: Vec::new(),
        }
    }

    /// One state looping onto itself with reward `c`.
    pub fn constant(c: f64) -> Self {
        Self::new(vec![c], vec![0])
    }
}

impl Environment for Chain {
    type State = usize;

    fn obs_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn episode_len(&self) -> usize {
        100
    }

    fn reset(&self, _rng: &mut Rng) -> usize {
        0
    }

    fn state_from_slice(&self, v: &[f64]) -> Result<usize> {
        check_dim(1, v.len())?;
        let s = v[0] as usize;
        if v[0] < 0.0 || s >= self.rewards.len() || s as f64 != v[0] {
            return Err(domain(format!("no chain state {}", v[0])));
        }
        Ok(s)
    }

    fn observe(&self, s: &usize) -> Vec<f64> {
        vec![*s as f64]
    }

    fn safe_action_set(&self, _s: &usize) -> Result<SafeActionSet> {
        SafeActionSet::interval(-1.0, 1.0)
    }

    fn step(&self, s: &usize, _u: &[f64]) -> Step<usize> {
        let next = self.next[*s];
        Step {
            next,
            reward: self.rewards[*s],
            reached_goal: false,
            terminal: self.terminal_states.contains(&next),
        }
    }

    fn is_safe(&self, _s: &usize) -> bool {
        true
    }

    fn actuator_box(&self) -> ActionBox {
        ActionBox::symmetric(1, 1.0).expect("unit box")
    }
}
