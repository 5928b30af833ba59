//! Discrete-time barrier interval for the torque-controlled pendulum.
//!
//! With `c(θ, u) = δt² (3g/(2l) sin θ + 3/(ml²) u)` the one-step angle change
//! is `δt θ̇ + c`. Keeping it inside `[−η(θ + θ̄), η(θ̄ − θ)]` gives
//! `h(θ') ≥ (1 − η) h(θ)` for the barrier pair `h = (θ + θ̄, θ̄ − θ)`, so the
//! band `|θ| ≤ θ̄` is forward invariant.

use serde::{Deserialize, Serialize};

use super::{ActionBox, SafeActionSet, MEMBERSHIP_TOL};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumCbfParams {
    pub eta: f64,
    pub dt: f64,
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub theta_bound: f64,
    pub torque_min: f64,
    pub torque_max: f64,
}

impl Default for PendulumCbfParams {
    fn default() -> Self {
        Self {
            eta: 0.2,
            dt: 0.05,
            mass: 1.0,
            length: 1.0,
            gravity: 10.0,
            theta_bound: 0.5,
            torque_min: -15.0,
            torque_max: 15.0,
        }
    }
}

impl PendulumCbfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!("eta must lie in (0,1), got {}", self.eta)));
        }
        if !(self.dt > 0.0) || !(self.mass > 0.0) || !(self.length > 0.0) {
            return Err(Error::InvalidConfig("dt, mass and length must be positive".into()));
        }
        if !(self.theta_bound > 0.0 && self.theta_bound < std::f64::consts::PI) {
            return Err(Error::InvalidConfig(format!(
                "theta_bound must lie in (0, pi), got {}",
                self.theta_bound
            )));
        }
        self.torque_box().map(|_| ())
    }

    pub fn torque_box(&self) -> Result<ActionBox> {
        ActionBox::new(vec![self.torque_min], vec![self.torque_max])
    }

    /// Gravity contribution `3g/(2l)` to the angular acceleration.
    pub fn gravity_gain(&self) -> f64 {
        3.0 * self.gravity / (2.0 * self.length)
    }

    /// Torque contribution `3/(ml²)` to the angular acceleration.
    pub fn torque_gain(&self) -> f64 {
        3.0 / (self.mass * self.length * self.length)
    }

    /// Barrier values `(θ + θ̄, θ̄ − θ)`.
    pub fn barrier(&self, theta: f64) -> [f64; 2] {
        [theta + self.theta_bound, self.theta_bound - theta]
    }
}

/// Torques keeping the pendulum inside `|θ| ≤ θ̄` for one step, intersected
/// with the actuator limits.
pub fn pendulum_safe_interval(theta: f64, theta_dot: f64, p: &PendulumCbfParams) -> Result<SafeActionSet> {
    if !theta.is_finite() || !theta_dot.is_finite() {
        return Err(domain("non-finite pendulum state"));
    }
    if theta.abs() > p.theta_bound + MEMBERSHIP_TOL {
        return Err(Error::Precondition(format!(
            "state theta={theta} lies outside the safe band |theta| <= {}",
            p.theta_bound
        )));
    }
    let dt2 = p.dt * p.dt;
    let drift = p.dt * theta_dot + dt2 * p.gravity_gain() * theta.sin();
    let k = dt2 * p.torque_gain();
    let [h_lo, h_hi] = p.barrier(theta);
    let u_lo = ((-p.eta * h_lo - drift) / k).max(p.torque_min);
    let u_hi = ((p.eta * h_hi - drift) / k).min(p.torque_max);
    if u_lo > u_hi {
        return Err(Error::SafeSetEmpty(format!(
            "barrier interval [{u_lo}, {u_hi}] at theta={theta}, theta_dot={theta_dot}"
        )));
    }
    SafeActionSet::interval(u_lo, u_hi)
}
