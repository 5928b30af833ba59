use super::ActionBox;
use crate::error::{check_dim, Error, Result};

/// Largest-area axis-aligned rectangle inside `H ∩ {u : a·u ≤ b}` (2-D).
///
/// Any inscribed rectangle can be grown until it touches the two faces of
/// `H` that meet at the corner minimizing `a·u`, so the optimum is anchored
/// at that corner. The sign pattern of `a` selects which of the four corners
/// it is. The opposite corner then lies on the constraint line, where the
/// area is a concave quadratic in one coordinate; it is maximized in closed
/// form and clamped to `H`.
pub fn max_inner_hyperrectangle(a: &[f64], b: f64, h: &ActionBox) -> Result<ActionBox> {
    check_dim(2, a.len())?;
    check_dim(2, h.dim())?;
    if a.iter().all(|&x| x == 0.0) {
        return if b >= 0.0 {
            Ok(h.clone())
        } else {
            Err(Error::SafeSetEmpty(format!("degenerate constraint 0 <= {b}")))
        };
    }
    // Ties (a_i = 0) anchor at the lower face.
    let anchor = [
        if a[0] >= 0.0 { h.lower()[0] } else { h.upper()[0] },
        if a[1] >= 0.0 { h.lower()[1] } else { h.upper()[1] },
    ];
    let dir = [a[0].signum_or_one(), a[1].signum_or_one()];
    let c = [a[0].abs(), a[1].abs()];
    let w = [h.width(0), h.width(1)];
    let budget = b - (a[0] * anchor[0] + a[1] * anchor[1]);
    if budget < 0.0 {
        return Err(Error::SafeSetEmpty(format!(
            "halfspace misses the actuator box by {}",
            -budget
        )));
    }
    if c[0] * w[0] + c[1] * w[1] <= budget {
        return Ok(h.clone());
    }
    let mut d = solve_extents(c, w, budget);

    // Pull the free corner back inside if rounding pushed it over the line.
    for _ in 0..4 {
        let excess = c[0] * d[0] + c[1] * d[1] - budget;
        if excess <= 0.0 {
            break;
        }
        let k = if c[0] * d[0] >= c[1] * d[1] { 0 } else { 1 };
        d[k] = (d[k] - excess / c[k] * (1.0 + 1e-12) - f64::EPSILON * d[k]).max(0.0);
    }

    let mut lower = [0.0; 2];
    let mut upper = [0.0; 2];
    for i in 0..2 {
        let free = anchor[i] + dir[i] * d[i];
        lower[i] = anchor[i].min(free).max(h.lower()[i]);
        upper[i] = anchor[i].max(free).min(h.upper()[i]);
    }
    ActionBox::new(lower.to_vec(), upper.to_vec())
}

/// Maximize `d0·d1` subject to `c0 d0 + c1 d1 ≤ budget`, `0 ≤ d_i ≤ w_i`,
/// when the full box is infeasible.
fn solve_extents(c: [f64; 2], w: [f64; 2], budget: f64) -> [f64; 2] {
    if c[0] == 0.0 {
        return [w[0], (budget / c[1]).min(w[1])];
    }
    if c[1] == 0.0 {
        return [(budget / c[0]).min(w[0]), w[1]];
    }
    let lo = ((budget - c[1] * w[1]) / c[0]).max(0.0);
    let hi = (budget / c[0]).min(w[0]);
    let d0 = (budget / (2.0 * c[0])).clamp(lo, hi.max(lo));
    let d1 = ((budget - c[0] * d0) / c[1]).clamp(0.0, w[1]);
    [d0, d1]
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Exact area of `H ∩ {u : a·u ≤ b}` (2-D), by clipping the box polygon.
pub fn halfspace_box_area(a: &[f64], b: f64, h: &ActionBox) -> Result<f64> {
    check_dim(2, a.len())?;
    check_dim(2, h.dim())?;
    let (l, u) = (h.lower(), h.upper());
    let square = [[l[0], l[1]], [u[0], l[1]], [u[0], u[1]], [l[0], u[1]]];
    let val = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(5);
    for i in 0..4 {
        let p = square[i];
        let q = square[(i + 1) % 4];
        let (fp, fq) = (val(&p), val(&q));
        if fp <= 0.0 {
            poly.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            poly.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    let n = poly.len();
    if n < 3 {
        return Ok(0.0);
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    Ok(0.5 * twice.abs())
}
