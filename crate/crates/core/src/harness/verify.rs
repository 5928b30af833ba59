use crate::envs::{Chain, Environment, PendulumEnv, PendulumState, QuadEnv, QuadState};
use crate::error::Result;
use crate::nets::ParamVector;
use crate::oracles::{
    central_difference, chain_q_value, erf, grid_best_rectangle, max_relative_error, mean_and_stderr,
};
use crate::policies::{
    estimate_normalization, quadrature_normalization, quadrature_truncated_score, BaseDensity, Policy, PolicyDensity,
};
use crate::safety::{max_inner_hyperrectangle, pendulum_safe_interval, ActionBox, SafeActionSet, SafeSetShape};
use crate::stochastics::{GaussLegendre, Rng};
use crate::trainers::{est_q, UniformActor};
use crate::Error;

/// Oracle suites runnable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    EstQ,
    Scores,
    MaxRect,
    Invariance,
    Normalization,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::EstQ, Suite::Scores, Suite::MaxRect, Suite::Invariance, Suite::Normalization];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EstQ => "estq",
            Suite::Scores => "scores",
            Suite::MaxRect => "maxrect",
            Suite::Invariance => "invariance",
            Suite::Normalization => "normalization",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}' (estq, scores, maxrect, invariance, normalization)"))
    }
}

/// One line of a verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn verify(suite: Suite) -> Result<Vec<Check>> {
    match suite {
        Suite::EstQ => estq_checks(),
        Suite::Scores => score_checks(),
        Suite::MaxRect => maxrect_checks(),
        Suite::Invariance => invariance_checks(),
        Suite::Normalization => normalization_checks(),
    }
}

fn within_3se(name: String, xs: &[f64], truth: f64) -> Check {
    let (m, se) = mean_and_stderr(xs);
    Check::new(
        name,
        (m - truth).abs() <= 3.0 * se,
        format!("mean {m:.6} vs {truth:.6}, 3·se {:.2e}", 3.0 * se),
    )
}

fn estq_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let c = 1.5;
    let env = Chain::constant(c);
    for (k, &gamma) in [0.5, 0.9, 0.99].iter().enumerate() {
        let mut rng = Rng::new(100 + k as u64);
        let xs = (0..100_000)
            .map(|_| est_q(&env, &UniformActor, &0, &[0.0], gamma, &mut rng))
            .collect::<Result<Vec<f64>>>()?;
        out.push(within_3se(format!("constant reward, gamma {gamma}"), &xs, c / (1.0 - gamma)));
    }
    let chain = Chain::new(vec![1.0, -2.0], vec![1, 0]);
    for (k, &gamma) in [0.5, 0.9].iter().enumerate() {
        let truth = chain_q_value(&chain.rewards, &chain.next, 0, gamma, 10_000);
        let mut rng = Rng::new(200 + k as u64);
        let xs = (0..100_000)
            .map(|_| est_q(&chain, &UniformActor, &0, &[0.0], gamma, &mut rng))
            .collect::<Result<Vec<f64>>>()?;
        out.push(within_3se(format!("two-state chain, gamma {gamma}"), &xs, truth));
    }
    Ok(out)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn score_checks() -> Result<Vec<Check>> {
    let mut rng = Rng::new(7);
    let (mut beta_worst, mut beta_abs) = (0.0f64, 0.0f64);
    for case in 0..20 {
        let n = 1 + case % 2;
        let hidden: &[usize] = if case % 3 == 0 { &[] } else { &[5] };
        let mut p = Policy::beta(3, n, hidden, &mut rng)?;
        let x: Vec<f64> = (0..3).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let lo: Vec<f64> = (0..n).map(|_| rng.uniform_range(-5.0, 0.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.uniform_range(0.5, 5.0)).collect();
        let bx = ActionBox::new(lo, hi)?;
        let u: Vec<f64> = (0..n)
            .map(|i| bx.lower()[i] + bx.width(i) * rng.uniform_range(0.02, 0.98))
            .collect();
        let g = p.score(&x, &u, &bx)?;
        let theta = p.params().as_slice().to_vec();
        let fd = central_difference(
            |t| {
                p.set_params(ParamVector::new(t.to_vec())).expect("same length");
                p.log_prob(&x, &u, &bx).expect("valid inputs")
            },
            &theta,
            1e-5,
        );
        beta_worst = beta_worst.max(max_relative_error(g.as_slice(), &fd, 1e-8));
        beta_abs = beta_abs.max(max_abs_diff(g.as_slice(), &fd));
    }

    let rule = GaussLegendre::new(64);
    let support = ActionBox::symmetric(1, 15.0)?;
    let (mut trunc_worst, mut trunc_abs) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let mut p = Policy::gaussian(2, &[4], support.clone(), &mut rng)?;
        let nl = p.num_params();
        p.params_mut()[nl - 1] = rng.uniform_range(-0.5, 0.5);
        let x = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
        let lo = rng.uniform_range(-2.0, 0.0);
        let hi = lo + rng.uniform_range(0.3, 2.5);
        let u = rng.uniform_range(lo, hi);
        let est = {
            let base = PolicyDensity::new(&p, &x, support.clone())?;
            quadrature_truncated_score(&base, u, lo, hi, &rule)?
        };
        let theta = p.params().as_slice().to_vec();
        let fd = central_difference(
            |t| {
                p.set_params(ParamVector::new(t.to_vec())).expect("same length");
                let base = PolicyDensity::new(&p, &x, support.clone()).expect("valid inputs");
                let z = quadrature_normalization(&base, lo, hi, &rule).expect("valid interval");
                base.log_density(&[u]).expect("valid inputs") - z.ln()
            },
            &theta,
            1e-5,
        );
        trunc_worst = trunc_worst.max(max_relative_error(est.score.as_slice(), &fd, 1e-8));
        trunc_abs = trunc_abs.max(max_abs_diff(est.score.as_slice(), &fd));
    }
    Ok(vec![
        Check::new(
            "Beta box score vs finite differences (20 cases)",
            beta_worst <= 1e-4,
            format!("worst relative error {beta_worst:.2e}, worst absolute {beta_abs:.2e}"),
        ),
        Check::new(
            "truncated Gaussian score vs finite differences (20 cases)",
            trunc_worst <= 1e-4,
            format!("worst relative error {trunc_worst:.2e}, worst absolute {trunc_abs:.2e}"),
        ),
    ])
}

fn maxrect_checks() -> Result<Vec<Check>> {
    let mut rng = Rng::new(11);
    let (mut area_fail, mut corner_fail, mut empty_mismatch, mut solved) = (0, 0, 0, 0);
    let mut worst_ratio = f64::INFINITY;
    while solved < 500 {
        let lo = [rng.uniform_range(-5.0, 0.0), rng.uniform_range(-5.0, 0.0)];
        let h = ActionBox::new(
            lo.to_vec(),
            vec![lo[0] + rng.uniform_range(0.5, 8.0), lo[1] + rng.uniform_range(0.5, 8.0)],
        )?;
        let a = [rng.uniform_range(-3.0, 3.0), rng.uniform_range(-3.0, 3.0)];
        let b = rng.uniform_range(-6.0, 6.0);
        let grid = grid_best_rectangle(&a, b, &h, 200);
        match max_inner_hyperrectangle(&a, b, &h) {
            Ok(hc) => {
                solved += 1;
                if let Some(best) = grid {
                    if best > 0.0 {
                        worst_ratio = worst_ratio.min(hc.volume() / best);
                    }
                    if hc.volume() < 0.99 * best - 1e-12 {
                        area_fail += 1;
                    }
                }
                let bad_corner = !hc.is_subset_of(&h, 1e-12)
                    || hc.corners().iter().any(|c| a[0] * c[0] + a[1] * c[1] > b + 1e-9);
                corner_fail += bad_corner as usize;
            }
            Err(Error::SafeSetEmpty(_)) => empty_mismatch += grid.is_some() as usize,
            Err(e) => return Err(e),
        }
    }
    Ok(vec![
        Check::new(
            "area within 1% of 200x200 grid search",
            area_fail == 0,
            format!("{area_fail} failures over {solved} solved instances, worst area/grid {worst_ratio:.4}"),
        ),
        Check::new(
            "corners inside halfspace and actuator box",
            corner_fail == 0,
            format!("{corner_fail} failures"),
        ),
        Check::new(
            "empty only when the grid finds nothing",
            empty_mismatch == 0,
            format!("{empty_mismatch} mismatches"),
        ),
    ])
}

fn invariance_checks() -> Result<Vec<Check>> {
    let env = PendulumEnv::default();
    let p = &env.cbf;
    let mut rng = Rng::new(13);
    let (mut failures, mut empty, mut checked) = (0usize, 0usize, 0usize);
    for _ in 0..100_000 {
        let theta = rng.uniform_range(-p.theta_bound, p.theta_bound);
        let theta_dot = rng.uniform_range(-env.max_speed, env.max_speed);
        let set = match pendulum_safe_interval(theta, theta_dot, p) {
            Ok(s) => s,
            Err(Error::SafeSetEmpty(_)) => {
                empty += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let SafeSetShape::Interval { lo, hi } = *set.shape() else {
            unreachable!("pendulum sets are intervals")
        };
        for u in [lo, hi, rng.uniform_range(lo, hi)] {
            let next = env.step(&PendulumState { theta, theta_dot }, &[u]).next;
            let (h, h_next) = (p.barrier(theta), p.barrier(next.theta));
            let decay_ok = (0..2).all(|i| h_next[i] >= (1.0 - p.eta) * h[i] - 1e-9);
            if !decay_ok || next.theta.abs() > p.theta_bound + 1e-9 {
                failures += 1;
            }
            checked += 1;
        }
    }

    let quad = QuadEnv::default();
    let mut worst_h = f64::INFINITY;
    for k in 0..100u64 {
        // Start close to the obstacle, moving toward it.
        let mut rng = Rng::new(1_000 + k);
        let phi = rng.uniform_range(0.0, std::f64::consts::TAU);
        let (rho, speed) = (rng.uniform_range(1.25, 3.0), rng.uniform_range(0.0, 1.0));
        let (c, sn) = (phi.cos(), phi.sin());
        let o = quad.cbf.r_obs;
        let mut s = QuadState {
            r: [o[0] + rho * c, o[1] + rho * sn],
            r_dot: [-speed * c, -speed * sn],
        };
        for _ in 0..500 {
            let set = quad.safe_action_set(&s)?;
            let u = set.sampling_box().uniform_sample(&mut rng);
            s = quad.step(&s, &u).next;
            worst_h = worst_h.min(quad.barrier(&s));
        }
    }
    Ok(vec![
        Check::new(
            "pendulum one-step barrier decay and |theta| bound",
            failures == 0,
            format!("{failures} failures over {checked} transitions ({empty} states with an empty set)"),
        ),
        Check::new(
            "quadcopter rollouts near the obstacle keep h >= -1e-3",
            worst_h >= -1e-3,
            format!("lowest h over 100 x 500 steps: {worst_h:.3e}"),
        ),
    ])
}

/// Uniform density on `[0, 1]`.
struct Unit;

impl BaseDensity for Unit {
    fn num_params(&self) -> usize {
        0
    }
    fn log_density(&self, u: &[f64]) -> Result<f64> {
        Ok(if (0.0..=1.0).contains(&u[0]) { 0.0 } else { f64::NEG_INFINITY })
    }
    fn add_score(&self, _u: &[f64], _scale: f64, _grad: &mut [f64]) -> Result<()> {
        Ok(())
    }
    fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        Ok(vec![rng.uniform()])
    }
}

fn normalization_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = Rng::new(17);

    let set = SafeActionSet::interval(0.2, 0.6)?;
    let est = estimate_normalization(&Unit, &set, 10_000, &mut rng)?;
    out.push(Check::new("uniform base on [0.2, 0.6]", (est - 0.4).abs() <= 1e-12, format!("{est}")));
    let q = quadrature_normalization(&Unit, 0.2, 0.6, &GaussLegendre::new(16))?;
    out.push(Check::new("uniform base, quadrature", (q - 0.4).abs() <= 1e-10, format!("{q}")));
    let full = SafeActionSet::interval(0.0, 1.0)?;
    let est = estimate_normalization(&Unit, &full, 10_000, &mut rng)?;
    out.push(Check::new("uniform base, full support", (est - 1.0).abs() <= 1e-12, format!("{est}")));

    let support = ActionBox::symmetric(1, 15.0)?;
    let mut p = Policy::gaussian(1, &[], support.clone(), &mut Rng::new(0))?;
    p.set_params(ParamVector::zeros(p.num_params()))?;
    let base = PolicyDensity::new(&p, &[0.0], support.clone())?;
    let set = SafeActionSet::interval(-1.0, 1.0)?;
    let xs = (0..100_000)
        .map(|_| Ok(2.0 * base.density(&set.uniform_sample(&mut rng)?)?))
        .collect::<Result<Vec<f64>>>()?;
    out.push(within_3se(
        "standard normal on [-1, 1] vs erf".into(),
        &xs,
        erf(1.0 / std::f64::consts::SQRT_2),
    ));

    let mut p = Policy::gaussian(1, &[3], support.clone(), &mut Rng::new(6))?;
    let nl = p.num_params();
    p.params_mut()[nl - 1] = 0.3;
    let base = PolicyDensity::new(&p, &[0.7], support)?;
    let set = SafeActionSet::interval(-0.5, 1.5)?;
    let xs = (0..200)
        .map(|_| estimate_normalization(&base, &set, 100, &mut rng))
        .collect::<Result<Vec<f64>>>()?;
    let q = quadrature_normalization(&base, -0.5, 1.5, &GaussLegendre::new(64))?;
    out.push(within_3se("200 estimates at M = 100 vs quadrature".into(), &xs, q));
    Ok(out)
}
