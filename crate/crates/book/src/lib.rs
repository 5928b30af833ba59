//! The guide in `book/`, one module per chapter. Building the docs renders
//! the chapters; `cargo test` runs every snippet in them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/safe-action-sets.md")]
pub mod safe_action_sets {}

#[doc = include_str!("../../../book/src/policies.md")]
pub mod policies {}

#[doc = include_str!("../../../book/src/value-estimates.md")]
pub mod value_estimates {}

#[doc = include_str!("../../../book/src/safe-rpg.md")]
pub mod safe_rpg {}

#[doc = include_str!("../../../book/src/ppo.md")]
pub mod ppo {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
