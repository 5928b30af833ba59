use serde::{Deserialize, Serialize};

use super::{Environment, Step};
use crate::error::Result;
use crate::safety::{pendulum_safe_interval, ActionBox, PendulumCbfParams, SafeActionSet, MEMBERSHIP_TOL};
use crate::stochastics::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

/// Torque-controlled pendulum, `θ = 0` upright.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumEnv {
    pub cbf: PendulumCbfParams,
    pub max_speed: f64,
    pub episode_len: usize,
}

impl Default for PendulumEnv {
    fn default() -> Self {
        Self {
            cbf: PendulumCbfParams::default(),
            max_speed: 8.0,
            episode_len: 300,
        }
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

impl PendulumEnv {
    pub fn validate(&self) -> Result<()> {
        self.cbf.validate()?;
        if !(self.max_speed > 0.0) || self.episode_len == 0 {
            return Err(crate::Error::InvalidConfig(
                "max_speed and episode_len must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn reward(&self, s: &PendulumState, u: f64) -> f64 {
        let th = wrap_angle(s.theta);
        -(th * th + 0.1 * s.theta_dot * s.theta_dot + 0.001 * u * u)
    }
}

impl Environment for PendulumEnv {
    type State = PendulumState;

    fn obs_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn episode_len(&self) -> usize {
        self.episode_len
    }

    fn reset(&self, rng: &mut Rng) -> PendulumState {
        let bound = 0.9 * self.cbf.theta_bound;
        PendulumState {
            theta: rng.uniform_range(-bound, bound),
            theta_dot: rng.uniform_range(-1.0, 1.0),
        }
    }

    fn state_from_slice(&self, v: &[f64]) -> Result<PendulumState> {
        crate::error::check_dim(2, v.len())?;
        Ok(PendulumState { theta: v[0], theta_dot: v[1] })
    }

    fn observe(&self, s: &PendulumState) -> Vec<f64> {
        vec![s.theta.cos(), s.theta.sin(), s.theta_dot]
    }

    fn safe_action_set(&self, s: &PendulumState) -> Result<SafeActionSet> {
        pendulum_safe_interval(s.theta, s.theta_dot, &self.cbf)
    }

    fn step(&self, s: &PendulumState, u: &[f64]) -> Step<PendulumState> {
        let p = &self.cbf;
        let u = u[0];
        let accel = p.gravity_gain() * s.theta.sin() + p.torque_gain() * u;
        let theta = s.theta + p.dt * s.theta_dot + p.dt * p.dt * accel;
        let theta_dot = s.theta_dot + p.dt * accel;
        Step {
            next: PendulumState {
                theta: wrap_angle(theta),
                theta_dot: theta_dot.clamp(-self.max_speed, self.max_speed),
            },
            reward: self.reward(s, u),
            reached_goal: false,
            terminal: false,
        }
    }

    fn is_safe(&self, s: &PendulumState) -> bool {
        s.theta.abs() <= self.cbf.theta_bound + MEMBERSHIP_TOL
    }

    fn actuator_box(&self) -> ActionBox {
        self.cbf.torque_box().expect("validated torque box")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> PendulumEnv {
        PendulumEnv::default()
    }

    #[test]
    fn upright_fixed_point() {
        let s = PendulumState { theta: 0.0, theta_dot: 0.0 };
        let st = env().step(&s, &[0.0]);
        assert_eq!(st.next, s);
        assert_eq!(st.reward, 0.0);
    }

    #[test]
    fn small_angle_step() {
        let s = PendulumState { theta: 0.1, theta_dot: 0.0 };
        let st = env().step(&s, &[0.0]);
        let expect_theta = 0.1 + 0.0025 * 15.0 * 0.1f64.sin();
        let expect_rate = 0.05 * 15.0 * 0.1f64.sin();
        assert!((st.next.theta - expect_theta).abs() < 1e-15);
        assert!((st.next.theta_dot - expect_rate).abs() < 1e-15);
        assert!((st.next.theta - 0.103_743_8).abs() < 1e-7);
        assert!((st.next.theta_dot - 0.074_875_06).abs() < 1e-7);
    }

    #[test]
    fn hanging_fixed_point() {
        let pi = std::f64::consts::PI;
        let s = PendulumState { theta: pi, theta_dot: 0.0 };
        let st = env().step(&s, &[0.0]);
        assert!((st.next.theta.abs() - pi).abs() < 1e-12);
        assert!(st.next.theta_dot.abs() < 1e-12);
        assert!((st.reward + pi * pi).abs() < 1e-12);
    }

    #[test]
    fn wrap_and_clamp() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.25) + 0.25).abs() < 1e-15);
        let s = PendulumState { theta: 0.0, theta_dot: 7.9 };
        let st = env().step(&s, &[15.0]);
        assert_eq!(st.next.theta_dot, 8.0);
    }

    #[test]
    fn reset_is_safe_and_seeded() {
        let e = env();
        let mut rng = Rng::new(3);
        for _ in 0..10_000 {
            let s = e.reset(&mut rng);
            assert!(s.theta.abs() <= e.cbf.theta_bound);
            assert!(e.is_safe(&s));
        }
        assert_eq!(e.reset(&mut Rng::new(9)), e.reset(&mut Rng::new(9)));
    }

    #[test]
    fn origin_safe_set() {
        let e = PendulumEnv {
            cbf: PendulumCbfParams { eta: 0.5, theta_bound: 1.0, ..Default::default() },
            ..Default::default()
        };
        let s = e.safe_action_set(&PendulumState { theta: 0.0, theta_dot: 0.0 }).unwrap();
        assert_eq!(s.sampling_box(), ActionBox::new(vec![-15.0], vec![15.0]).unwrap());
    }
}
