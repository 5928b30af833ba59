use serde::{Deserialize, Serialize};

use super::{Environment, Step};
use crate::error::{Error, Result};
use crate::safety::{quad_ecbf_halfspace, quad_h, ActionBox, QuadEcbfParams, SafeActionSet};
use crate::stochastics::Rng;

/// Barrier level below which a quadcopter state counts as unsafe.
pub const QUAD_SAFETY_TOL: f64 = 1e-3;

/// Planar double integrator: position and velocity in `x, y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadState {
    pub r: [f64; 2],
    pub r_dot: [f64; 2],
}

/// Goal, map boundary and reward constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadWorld {
    pub r_start: [f64; 2],
    pub r_goal: [f64; 2],
    pub eps_goal: f64,
    pub r_min: [f64; 2],
    pub r_max: [f64; 2],
    pub goal_bonus: f64,
    pub boundary_penalty: f64,
    /// End the episode on the first step outside the map bounds.
    pub terminate_out_of_bounds: bool,
}

impl Default for QuadWorld {
    fn default() -> Self {
        Self {
            r_start: [0.0, 0.0],
            r_goal: [5.0, 5.0],
            eps_goal: 0.25,
            r_min: [-2.0, -2.0],
            r_max: [8.0, 8.0],
            goal_bonus: 50.0,
            boundary_penalty: 400.0,
            terminate_out_of_bounds: true,
        }
    }
}

impl QuadWorld {
    pub fn in_bounds(&self, r: &[f64; 2]) -> bool {
        (0..2).all(|i| r[i] > self.r_min[i] && r[i] < self.r_max[i])
    }

    /// Piecewise reward at position `r`, and whether it is inside the goal ball.
    pub fn reward(&self, r: &[f64; 2]) -> (f64, bool) {
        let dist = ((r[0] - self.r_goal[0]).powi(2) + (r[1] - self.r_goal[1]).powi(2)).sqrt();
        if dist < self.eps_goal {
            return (self.goal_bonus, true);
        }
        if self.in_bounds(r) {
            (-dist, false)
        } else {
            (-dist - self.boundary_penalty, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadEnv {
    pub cbf: QuadEcbfParams,
    pub world: QuadWorld,
    pub episode_len: usize,
}

impl Default for QuadEnv {
    fn default() -> Self {
        Self {
            cbf: QuadEcbfParams::default(),
            world: QuadWorld::default(),
            episode_len: 180,
        }
    }
}

impl QuadEnv {
    pub fn validate(&self) -> Result<()> {
        self.cbf.validate()?;
        let w = &self.world;
        if !(w.eps_goal > 0.0) {
            return Err(Error::InvalidConfig("eps_goal must be positive".into()));
        }
        if !(0..2).all(|i| w.r_min[i] < w.r_goal[i] && w.r_goal[i] < w.r_max[i]) {
            return Err(Error::InvalidConfig("r_goal must lie strictly inside the map bounds".into()));
        }
        if !(quad_h(&w.r_start, &self.cbf) > 0.0) {
            return Err(Error::InvalidConfig("start position must lie outside the obstacle".into()));
        }
        if self.episode_len == 0 {
            return Err(Error::InvalidConfig("episode_len must be positive".into()));
        }
        Ok(())
    }

    pub fn barrier(&self, s: &QuadState) -> f64 {
        quad_h(&s.r, &self.cbf)
    }
}

/// Exact zero-order-hold discretization of the double integrator.
pub fn integrate(s: &QuadState, u: &[f64], dt: f64) -> QuadState {
    let mut next = *s;
    for i in 0..2 {
        next.r[i] = s.r[i] + s.r_dot[i] * dt + 0.5 * u[i] * dt * dt;
        next.r_dot[i] = s.r_dot[i] + u[i] * dt;
    }
    next
}

const OBS_SCALE: f64 = 0.2;

impl Environment for QuadEnv {
    type State = QuadState;

    fn obs_dim(&self) -> usize {
        6
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn episode_len(&self) -> usize {
        self.episode_len
    }

    fn reset(&self, _rng: &mut Rng) -> QuadState {
        QuadState {
            r: self.world.r_start,
            r_dot: [0.0, 0.0],
        }
    }

    /// `[x, y, ẋ, ẏ]`.
    fn state_from_slice(&self, v: &[f64]) -> Result<QuadState> {
        crate::error::check_dim(4, v.len())?;
        Ok(QuadState { r: [v[0], v[1]], r_dot: [v[2], v[3]] })
    }

    /// Goal offset, velocity and obstacle offset, scaled to order one.
    fn observe(&self, s: &QuadState) -> Vec<f64> {
        let g = &self.world.r_goal;
        let o = &self.cbf.r_obs;
        vec![
            OBS_SCALE * (s.r[0] - g[0]),
            OBS_SCALE * (s.r[1] - g[1]),
            OBS_SCALE * s.r_dot[0],
            OBS_SCALE * s.r_dot[1],
            OBS_SCALE * (s.r[0] - o[0]),
            OBS_SCALE * (s.r[1] - o[1]),
        ]
    }

    fn safe_action_set(&self, s: &QuadState) -> Result<SafeActionSet> {
        let h = self.barrier(s);
        if h < -QUAD_SAFETY_TOL {
            return Err(Error::Precondition(format!("quadcopter state is unsafe: h = {h}")));
        }
        let (a_row, b) = quad_ecbf_halfspace(&s.r, &s.r_dot, &self.cbf);
        SafeActionSet::halfspace_box(a_row, b, self.cbf.accel_box()?)
    }

    fn step(&self, s: &QuadState, u: &[f64]) -> Step<QuadState> {
        let next = integrate(s, u, self.cbf.dt);
        let (reward, reached_goal) = self.world.reward(&next.r);
        let terminal = self.world.terminate_out_of_bounds && !self.world.in_bounds(&next.r);
        Step {
            next,
            reward,
            reached_goal,
            terminal,
        }
    }

    fn is_safe(&self, s: &QuadState) -> bool {
        self.barrier(s) >= -QUAD_SAFETY_TOL
    }

    fn actuator_box(&self) -> ActionBox {
        self.cbf.accel_box().expect("validated acceleration box")
    }
}
