//! Exponential barrier for a quartic obstacle around the quadcopter.
//!
//! `h(r) = Σ (Δr_i / s_i)^4 − r_s` with `Δr = r − r_obs` and semi-axes
//! `s = (a, b, c)`. Since `u = r̈`, the condition `ḧ + K₁ h + K₂ ḣ ≥ 0`
//! is linear in `u`: `A_r u ≤ b_r` with `A_r = −(4 Δr_i³ / s_i⁴)_i`,
//! `D_r = diag(12 Δr_i² / s_i⁴)` and `b_r = ṙᵀ D_r ṙ + K₁ h − K₂ A_r ṙ`.
//!
//! Positions may be given in two or three coordinates; a missing `z` is 0.

use serde::{Deserialize, Serialize};

use super::ActionBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadEcbfParams {
    /// Obstacle semi-axes `(a, b, c)`.
    pub semi_axes: [f64; 3],
    pub r_s: f64,
    pub k1: f64,
    pub k2: f64,
    pub r_obs: [f64; 2],
    pub accel_min: [f64; 2],
    pub accel_max: [f64; 2],
    pub dt: f64,
}

impl Default for QuadEcbfParams {
    fn default() -> Self {
        Self {
            semi_axes: [1.0, 1.0, 1.0],
            r_s: 1.0,
            k1: 6.0,
            k2: 8.0,
            r_obs: [2.5, 2.5],
            accel_min: [-5.0, -5.0],
            accel_max: [5.0, 5.0],
            dt: 0.1,
        }
    }
}

impl QuadEcbfParams {
    pub fn validate(&self) -> Result<()> {
        if self.semi_axes.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidConfig("obstacle semi-axes must be positive".into()));
        }
        if !(self.r_s > 0.0) || !(self.k1 > 0.0) || !(self.k2 > 0.0) || !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("r_s, k1, k2 and dt must be positive".into()));
        }
        self.accel_box().map(|_| ())
    }

    pub fn accel_box(&self) -> Result<ActionBox> {
        ActionBox::new(self.accel_min.to_vec(), self.accel_max.to_vec())
    }

    fn delta(&self, r: &[f64], i: usize) -> f64 {
        let obs = if i < 2 { self.r_obs[i] } else { 0.0 };
        r.get(i).copied().unwrap_or(0.0) - obs
    }
}

/// Barrier value; the position is safe iff it is nonnegative.
pub fn quad_h(r: &[f64], p: &QuadEcbfParams) -> f64 {
    (0..3)
        .map(|i| (p.delta(r, i) / p.semi_axes[i]).powi(4))
        .sum::<f64>()
        - p.r_s
}

/// Coefficients `(A_r, b_r)` of the barrier condition `A_r u ≤ b_r`.
/// `A_r` has as many entries as `r`.
pub fn quad_ecbf_halfspace(r: &[f64], r_dot: &[f64], p: &QuadEcbfParams) -> (Vec<f64>, f64) {
    let n = r.len();
    let mut a_row = vec![0.0; n];
    let mut quad_form = 0.0;
    let mut a_dot_v = 0.0;
    for i in 0..n {
        let d = p.delta(r, i);
        let s4 = p.semi_axes[i].powi(4);
        a_row[i] = -4.0 * d.powi(3) / s4;
        let v = r_dot.get(i).copied().unwrap_or(0.0);
        quad_form += 12.0 * d * d / s4 * v * v;
        a_dot_v += a_row[i] * v;
    }
    let b = quad_form + p.k1 * quad_h(r, p) - p.k2 * a_dot_v;
    (a_row, b)
}

/// `ḧ + K₁ h + K₂ ḣ` under acceleration `u`, from the derivative formulas.
pub fn ecbf_residual(r: &[f64], r_dot: &[f64], u: &[f64], p: &QuadEcbfParams) -> f64 {
    let mut h_dot = 0.0;
    let mut h_ddot = 0.0;
    for i in 0..r.len() {
        let s = p.semi_axes[i];
        let q = p.delta(r, i) / s;
        let v = r_dot.get(i).copied().unwrap_or(0.0);
        let acc = u.get(i).copied().unwrap_or(0.0);
        h_dot += 4.0 * q.powi(3) * v / s;
        h_ddot += 12.0 * q * q * v * v / (s * s) + 4.0 * q.powi(3) * acc / s;
    }
    h_ddot + p.k1 * quad_h(r, p) + p.k2 * h_dot
}
