//! Independent reference computations used by the test suites and by the
//! `verify` subcommand. Nothing here calls into the code paths it checks.

use crate::safety::ActionBox;

/// Best area over rectangles spanned by one corner of `h` and a point of a
/// `(n+1) × (n+1)` grid over `h`, subject to every rectangle corner
/// satisfying `a·c ≤ b`. `None` if no grid point is feasible.
pub fn grid_best_rectangle(a: &[f64], b: f64, h: &ActionBox, n: usize) -> Option<f64> {
    let (lo, hi) = (h.lower(), h.upper());
    let xs: Vec<f64> = (0..=n).map(|i| lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64).collect();
    let ys: Vec<f64> = (0..=n).map(|i| lo[1] + (hi[1] - lo[1]) * i as f64 / n as f64).collect();
    let ok = |x: f64, y: f64| a[0] * x + a[1] * y <= b + 1e-12;
    let anchors = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    let mut best: Option<f64> = None;
    for &x in &xs {
        for &y in &ys {
            for anc in &anchors {
                if ok(x, y) && ok(anc[0], anc[1]) && ok(x, anc[1]) && ok(anc[0], y) {
                    let area = (x - anc[0]).abs() * (y - anc[1]).abs();
                    best = Some(best.map_or(area, |v: f64| v.max(area)));
                }
            }
        }
    }
    best
}

/// Error function by its Maclaurin series (accurate to ~1e-15 for |x| ≤ 3).
pub fn erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 5% critical value of the KS statistic.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Central-difference gradient of `f` at `x`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + eps;
            let fp = f(&p);
            p[i] = orig - eps;
            let fm = f(&p);
            p[i] = orig;
            (fp - fm) / (2.0 * eps)
        })
        .collect()
}

/// Largest per-coordinate mismatch between an analytic and a numerical
/// gradient, as `|g − fd| / max(|g|, |fd|)`, ignoring coordinates where the
/// absolute error is below `abs_floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], abs_floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(g, f)| {
            let err = (g - f).abs();
            if err <= abs_floor {
                0.0
            } else {
                err / g.abs().max(f.abs())
            }
        })
        .fold(0.0, f64::max)
}

/// Discounted action value of a deterministic chain whose reward depends only
/// on the state, by truncated value iteration over `horizon` steps.
pub fn chain_q_value(rewards: &[f64], next: &[usize], start: usize, gamma: f64, horizon: usize) -> f64 {
    let n = rewards.len();
    let mut v = vec![0.0; n];
    for _ in 0..horizon {
        v = (0..n).map(|s| rewards[s] + gamma * v[next[s]]).collect();
    }
    v[start]
}
