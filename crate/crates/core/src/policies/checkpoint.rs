use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Policy, PolicyFamily};
use crate::error::Result;
use crate::nets::{load_checkpoint, save_checkpoint};
use crate::safety::ActionBox;

/// Policy-specific fields stored in the checkpoint sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetadata {
    pub family: PolicyFamily,
    pub action_dim: usize,
    pub clip_box: Option<ActionBox>,
}

pub fn save_policy(stem: &Path, policy: &Policy) -> Result<()> {
    let meta = PolicyMetadata {
        family: policy.family(),
        action_dim: policy.action_dim(),
        clip_box: policy.clip_box().cloned(),
    };
    save_checkpoint(stem, policy.spec(), policy.params(), meta)
}

pub fn load_policy(stem: &Path) -> Result<Policy> {
    let (ck, params) = load_checkpoint::<PolicyMetadata>(stem)?;
    Policy::from_parts(ck.metadata.family, ck.spec, params, ck.metadata.clip_box)
}
