//! Training algorithms.
//!
//! [`est_q`] is the random-horizon action-value estimator, [`SafeRpg`] the
//! safe random-horizon policy gradient built on it, and [`ppo_train`] a
//! compact clipped-surrogate PPO used for the case studies. All of them draw
//! actions through [`select_action`], which decides how a policy interacts
//! with the safe action set.

mod actor;
mod adam;
mod estq;
mod eval;
mod metrics;
mod ppo;
mod safe_rpg;

pub use actor::{
    deterministic_action, projection_baseline_action, select_action, ActionMode, PolicyActor, SafePolicy,
    SelectedAction, UniformActor,
};
pub use adam::Adam;
pub use estq::{est_q, est_q_with_horizon};
pub use eval::{evaluate, EvalSummary};
pub use metrics::{RunMetrics, SafetyTally};
pub use ppo::{ppo_policy_gradient, ppo_train, PpoConfig, PpoIteration, ValueFunction};
pub use safe_rpg::{GradientEstimate, SafeRpg, SafeRpgConfig, StartState};
