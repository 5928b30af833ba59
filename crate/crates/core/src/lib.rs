//! Safe policy-gradient reinforcement learning with state-dependent action
//! constraints.
//!
//! Policies draw actions only from a safe action set `C(x)` computed by a
//! control barrier function, so the system never leaves its safe region
//! during training. The crate contains the probability building blocks
//! ([`stochastics`]), dependency-free neural networks ([`nets`]), box-scaled
//! Beta and clipped Gaussian policies ([`policies`]), the barrier
//! constructions ([`safety`]), two benchmark systems ([`envs`]), the training
//! algorithms ([`trainers`]) and a reproducible experiment runner
//! ([`harness`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envs;
mod error;
pub mod harness;
pub mod nets;
pub mod oracles;
pub mod policies;
pub mod safety;
pub mod stochastics;
pub mod trainers;

pub use error::{Error, Result};
