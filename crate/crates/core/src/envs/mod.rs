//! The two case-study environments as deterministic discrete-time systems,
//! plus a reward chain for checking value estimators.

mod chain;
mod pendulum;
mod quadcopter;

pub use chain::Chain;
pub use pendulum::{PendulumEnv, PendulumState};
pub use quadcopter::{QuadEnv, QuadState, QuadWorld};

use crate::error::Result;
use crate::safety::SafeActionSet;
use crate::stochastics::Rng;

/// Outcome of one environment step.
#[derive(Debug, Clone)]
pub struct Step<S> {
    pub next: S,
    pub reward: f64,
    pub reached_goal: bool,
    /// The episode ends with this transition; `next` is absorbing.
    pub terminal: bool,
}

/// A deterministic environment with a state-dependent safe action set.
pub trait Environment {
    type State: Clone + std::fmt::Debug;

    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn episode_len(&self) -> usize;
    fn reset(&self, rng: &mut Rng) -> Self::State;
    /// Builds a state from its coordinates, e.g. a configured start state.
    fn state_from_slice(&self, v: &[f64]) -> Result<Self::State>;
    /// Policy input features for a state.
    fn observe(&self, s: &Self::State) -> Vec<f64>;
    fn safe_action_set(&self, s: &Self::State) -> Result<SafeActionSet>;
    fn step(&self, s: &Self::State, u: &[f64]) -> Step<Self::State>;
    /// Whether the state lies in the safe set (within the environment's
    /// tolerance).
    fn is_safe(&self, s: &Self::State) -> bool;
    /// Fixed actuator limits, used by policies that ignore the safe set.
    fn actuator_box(&self) -> crate::safety::ActionBox;
}

/// Which environment a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Pendulum,
    Quadcopter,
}

impl std::str::FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pendulum" => Ok(Self::Pendulum),
            "quadcopter" => Ok(Self::Quadcopter),
            other => Err(format!("unknown environment '{other}' (pendulum, quadcopter)")),
        }
    }
}
