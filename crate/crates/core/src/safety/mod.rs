//! State-dependent safe action sets.
//!
//! A [`SafeActionSet`] is the set of controls that keep the next state inside
//! the safe region. Two constructions are provided: a discrete-time barrier
//! interval for the pendulum ([`pendulum`]) and an exponential-barrier
//! halfspace intersected with the actuator box for the quadcopter
//! ([`quadcopter`]), whose largest inscribed axis-aligned rectangle comes from
//! [`max_inner_hyperrectangle`].

mod action_box;
mod inner_rect;
pub mod pendulum;
pub mod quadcopter;

pub use action_box::ActionBox;
pub use inner_rect::{halfspace_box_area, max_inner_hyperrectangle};
pub use pendulum::{pendulum_safe_interval, PendulumCbfParams};
pub use quadcopter::{ecbf_residual, quad_ecbf_halfspace, quad_h, QuadEcbfParams};

use crate::error::{domain, Error, Result};
use crate::stochastics::Rng;

/// Absolute slack allowed when testing membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SafeSetShape {
    Interval { lo: f64, hi: f64 },
    Box(ActionBox),
    /// `{u ∈ bounds : a·u ≤ b}` together with its largest inscribed box.
    HalfspaceBox {
        a_row: Vec<f64>,
        b: f64,
        bounds: ActionBox,
        inner: ActionBox,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafeActionSet {
    shape: SafeSetShape,
    volume: f64,
}

impl SafeActionSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(domain(format!("interval endpoints must be finite: [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(Error::SafeSetEmpty(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(Self {
            shape: SafeSetShape::Interval { lo, hi },
            volume: hi - lo,
        })
    }

    pub fn boxed(b: ActionBox) -> Self {
        let volume = b.volume();
        Self {
            shape: SafeSetShape::Box(b),
            volume,
        }
    }

    /// Halfspace ∩ box in two dimensions; solves for the inner rectangle.
    pub fn halfspace_box(a_row: Vec<f64>, b: f64, bounds: ActionBox) -> Result<Self> {
        let inner = max_inner_hyperrectangle(&a_row, b, &bounds)?;
        let volume = halfspace_box_area(&a_row, b, &bounds)?;
        Ok(Self {
            shape: SafeSetShape::HalfspaceBox {
                a_row,
                b,
                bounds,
                inner,
            },
            volume,
        })
    }

    pub fn shape(&self) -> &SafeSetShape {
        &self.shape
    }

    /// Lebesgue measure of the set.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            SafeSetShape::Interval { .. } => 1,
            SafeSetShape::Box(b) => b.dim(),
            SafeSetShape::HalfspaceBox { bounds, .. } => bounds.dim(),
        }
    }

    /// Box a box-supported policy samples from: the set itself for intervals
    /// and boxes, the inner rectangle for halfspace sets.
    pub fn sampling_box(&self) -> ActionBox {
        match &self.shape {
            SafeSetShape::Interval { lo, hi } => ActionBox::new(vec![*lo], vec![*hi]).expect("lo <= hi"),
            SafeSetShape::Box(b) => b.clone(),
            SafeSetShape::HalfspaceBox { inner, .. } => inner.clone(),
        }
    }

    /// Smallest slack over the defining inequalities (negative means outside).
    pub fn slack(&self, u: &[f64]) -> f64 {
        match &self.shape {
            SafeSetShape::Interval { lo, hi } => (u[0] - lo).min(hi - u[0]),
            SafeSetShape::Box(b) => b.slack(u),
            SafeSetShape::HalfspaceBox { a_row, b, bounds, .. } => {
                let lin: f64 = a_row.iter().zip(u).map(|(a, x)| a * x).sum();
                bounds.slack(u).min(b - lin)
            }
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim() && self.slack(u) >= -MEMBERSHIP_TOL
    }

    /// Uniform draw from the set. Halfspace sets use rejection from the box.
    pub fn uniform_sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        match &self.shape {
            SafeSetShape::Interval { lo, hi } => Ok(vec![rng.uniform_range(*lo, *hi)]),
            SafeSetShape::Box(b) => Ok(b.uniform_sample(rng)),
            SafeSetShape::HalfspaceBox { bounds, .. } => {
                if self.volume <= 0.0 {
                    return Err(domain("cannot sample uniformly from a zero-area set"));
                }
                for _ in 0..1_000_000 {
                    let u = bounds.uniform_sample(rng);
                    if self.slack(&u) >= 0.0 {
                        return Ok(u);
                    }
                }
                Err(Error::SafeSetSamplingFailed { attempts: 1_000_000 })
            }
        }
    }
}
