//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the lines are printed even
//! when everything passes. Arguments that do not start with `-` select
//! criteria by key, e.g. `cargo test --test acceptance -- estq maxrect`.
//! Every oracle below is computed here, without the library's own checking
//! helpers.

use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use statrs::distribution::{ContinuousCDF, Normal};

use safe_rpg::envs::{Chain, EnvKind, Environment, PendulumEnv, PendulumState, QuadEnv, QuadState};
use safe_rpg::harness::{checkpoint_stem, run, Algorithm, ExperimentConfig, RunReport};
use safe_rpg::nets::ParamVector;
use safe_rpg::policies::{
    estimate_normalization, load_policy, quadrature_truncated_score, BaseDensity, Dist, Policy, PolicyDensity,
};
use safe_rpg::safety::{max_inner_hyperrectangle, pendulum_safe_interval, ActionBox, SafeActionSet, SafeSetShape};
use safe_rpg::stochastics::{GaussLegendre, Rng};
use safe_rpg::trainers::{est_q, SafeRpgConfig, UniformActor};
use safe_rpg::Error;

type Outcome = (bool, String);

struct Criterion {
    key: &'static str,
    title: &'static str,
    check: fn(&Path) -> Outcome,
}

const CRITERIA: [Criterion; 10] = [
    Criterion {
        key: "beta-safety",
        title: "pendulum ppo_beta: every logged iteration fully safe",
        check: beta_pendulum_is_always_safe,
    },
    Criterion {
        key: "gaussian-violates",
        title: "pendulum ppo_gaussian: every replication violates safety",
        check: gaussian_pendulum_violates,
    },
    Criterion {
        key: "quadcopter",
        title: "quadcopter ppo_beta: h >= -1e-3 in training and goal reached",
        check: quadcopter_safe_and_reaches_goal,
    },
    Criterion {
        key: "estq",
        title: "EstQ is unbiased on constant rewards",
        check: estq_is_unbiased,
    },
    Criterion {
        key: "scores",
        title: "score functions match finite differences",
        check: scores_match_finite_differences,
    },
    Criterion {
        key: "normalization",
        title: "Monte-Carlo normalization matches interval, Gaussian and erf values",
        check: normalization_matches_closed_forms,
    },
    Criterion {
        key: "maxrect",
        title: "max inner rectangle within 1% of grid search",
        check: maxrect_matches_grid,
    },
    Criterion {
        key: "invariance",
        title: "pendulum safe actions keep the barrier decay and angle bound",
        check: pendulum_one_step_invariance,
    },
    Criterion {
        key: "safe-rpg",
        title: "Safe-RPG improves the pendulum return by 20% of |initial|",
        check: safe_rpg_learns,
    },
    Criterion {
        key: "determinism",
        title: "repeated runs write byte-identical CSVs",
        check: reruns_are_byte_identical,
    },
];

fn main() -> ExitCode {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let scratch = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    for (i, c) in CRITERIA.iter().enumerate() {
        if !wanted.is_empty() && !wanted.iter().any(|w| c.key.contains(w.as_str())) {
            continue;
        }
        let dir = scratch.path().join(c.key);
        fs::create_dir_all(&dir).expect("criterion directory");
        let start = Instant::now();
        let (passed, detail) = (c.check)(&dir);
        failed += !passed as usize;
        println!(
            "{} {:>2} {:<18} {}  [{}; {:.0}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            c.key,
            c.title,
            detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn default_run(env: EnvKind, alg: Algorithm, dir: &Path) -> RunReport {
    let mut cfg = ExperimentConfig::defaults(env, alg);
    cfg.output_dir = dir.to_path_buf();
    run(&cfg).expect("run with default config")
}

// 1

fn beta_pendulum_is_always_safe(dir: &Path) -> Outcome {
    let report = default_run(EnvKind::Pendulum, Algorithm::PpoBeta, dir);
    let mut bad_rows = 0;
    let (mut violations, mut empties) = (0, 0);
    let mut steps = Vec::new();
    for rep in &report.replications {
        bad_rows += rep.rows.iter().filter(|m| m.safety_rate != 1.0).count();
        violations += rep.rows.iter().map(|m| m.violations).sum::<u64>();
        empties += rep.rows.iter().map(|m| m.safe_set_empty_events).sum::<u64>();
        steps.push(rep.rows.iter().map(|m| m.steps).sum::<u64>());
    }
    let passed = report.replications.len() == 5
        && steps.iter().all(|&s| s == 150_000)
        && bad_rows == 0
        && violations == 0
        && empties == 0;
    (
        passed,
        format!(
            "{} replications, steps {steps:?}, rows below 1.0: {bad_rows}, violations {violations}, empty sets {empties}",
            report.replications.len()
        ),
    )
}

// 2

fn gaussian_pendulum_violates(dir: &Path) -> Outcome {
    let report = default_run(EnvKind::Pendulum, Algorithm::PpoGaussian, dir);
    let lowest: Vec<f64> = report
        .replications
        .iter()
        .map(|r| r.rows.iter().map(|m| m.safety_rate).fold(1.0, f64::min))
        .collect();
    let steps: Vec<u64> = report.replications.iter().map(|r| r.rows.iter().map(|m| m.steps).sum()).collect();
    let passed = lowest.len() == 5 && steps.iter().all(|&s| s == 150_000) && lowest.iter().all(|&r| r < 1.0);
    let shown: Vec<String> = lowest.iter().map(|r| format!("{r:.3}")).collect();
    (passed, format!("lowest safety rate per replication [{}]", shown.join(", ")))
}

// 3

/// Barrier of the default obstacle, written out independently.
fn obstacle_h(r: [f64; 2], q: &QuadEnv) -> f64 {
    let o = q.cbf.r_obs;
    let a = q.cbf.semi_axes;
    ((r[0] - o[0]) / a[0]).powi(4) + ((r[1] - o[1]) / a[1]).powi(4) - q.cbf.r_s
}

fn quadcopter_safe_and_reaches_goal(dir: &Path) -> Outcome {
    let mut cfg = ExperimentConfig::defaults(EnvKind::Quadcopter, Algorithm::PpoBeta);
    cfg.output_dir = dir.to_path_buf();
    let report = run(&cfg).expect("quadcopter run");
    let env = &cfg.quadcopter;
    let (mut violations, mut empties) = (0u64, 0u64);
    let mut reaching = 0;
    let mut replay_mismatch = 0;
    let mut replay_min_h = f64::INFINITY;
    let mut fractions = Vec::new();
    for rep in &report.replications {
        violations += rep.rows.iter().map(|m| m.violations).sum::<u64>();
        empties += rep.rows.iter().map(|m| m.safe_set_empty_events).sum::<u64>();
        let frac = rep.final_eval.goal_fraction;
        fractions.push(format!("{frac:.2}"));
        reaching += (frac >= 0.5) as usize;

        // Replay one evaluation episode from the checkpoint and judge it with
        // a hand-written distance and barrier.
        let policy = load_policy(&checkpoint_stem(dir, rep.index, rep.seed)).expect("checkpoint");
        let mut s = QuadState {
            r: env.world.r_start,
            r_dot: [0.0, 0.0],
        };
        let mut reached = false;
        for _ in 0..env.episode_len {
            let Ok(set) = env.safe_action_set(&s) else { break };
            let u = policy.mean_action(&env.observe(&s), &set.sampling_box()).expect("action");
            let step = env.step(&s, &u);
            s = step.next;
            replay_min_h = replay_min_h.min(obstacle_h(s.r, env));
            let g = env.world.r_goal;
            reached |= ((s.r[0] - g[0]).powi(2) + (s.r[1] - g[1]).powi(2)).sqrt() < 0.25;
            if step.terminal {
                break;
            }
        }
        // Evaluation starts are deterministic, so every episode matches the replay.
        replay_mismatch += (reached != (frac >= 0.5)) as usize;
    }
    let passed = report.replications.len() == 6
        && violations == 0
        && empties == 0
        && replay_min_h >= -1e-3
        && replay_mismatch == 0
        && reaching >= 4;
    (
        passed,
        format!(
            "goal fraction per replication [{}], {reaching}/6 reach, training violations {violations}, empty sets {empties}, replay min h {replay_min_h:.3}, replay mismatches {replay_mismatch}",
            fractions.join(", ")
        ),
    )
}

// 4

fn estq_is_unbiased(_: &Path) -> Outcome {
    let c = 1.5;
    let env = Chain::constant(c);
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, gamma) in [0.5, 0.9, 0.99].into_iter().enumerate() {
        let mut rng = Rng::new(4_000 + k as u64);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| est_q(&env, &UniformActor, &0, &[0.0], gamma, &mut rng).expect("estimate"))
            .collect();
        let (m, se) = mean_se(&xs);
        let truth = c / (1.0 - gamma);
        let z = (m - truth) / se;
        passed &= z.abs() <= 3.0;
        parts.push(format!("gamma {gamma}: {m:.4} vs {truth:.4} (z {z:+.2})"));
    }
    (passed, parts.join(", "))
}

// 5

fn central_difference(mut f: impl FnMut(&[f64]) -> f64, theta: &[f64], eps: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            t[i] = theta[i] + eps;
            let up = f(&t);
            t[i] = theta[i] - eps;
            let down = f(&t);
            t[i] = theta[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// `‖a − b‖∞ / ‖b‖∞`.
fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    diff / scale.max(1e-12)
}

/// Log density of a normal truncated to `[lo, hi]`, from the closed-form CDF.
fn truncated_normal_log_density(u: f64, mean: f64, log_std: f64, lo: f64, hi: f64) -> f64 {
    let sd = log_std.exp();
    let n = Normal::new(mean, sd).expect("positive std");
    let z = (u - mean) / sd;
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln() - (n.cdf(hi) - n.cdf(lo)).ln()
}

fn scores_match_finite_differences(_: &Path) -> Outcome {
    let mut rng = Rng::new(5_000);
    let mut beta_worst = 0.0f64;
    for case in 0..20 {
        let n = 1 + case % 2;
        let hidden: &[usize] = if case % 4 == 0 { &[] } else { &[6, 5] };
        let mut p = Policy::beta(3, n, hidden, &mut rng).expect("policy");
        let x: Vec<f64> = (0..3).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let lo: Vec<f64> = (0..n).map(|_| rng.uniform_range(-4.0, 1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.uniform_range(0.3, 6.0)).collect();
        let bx = ActionBox::new(lo, hi).expect("box");
        let u: Vec<f64> = (0..n)
            .map(|i| bx.lower()[i] + bx.width(i) * rng.uniform_range(0.02, 0.98))
            .collect();
        let score = p.score(&x, &u, &bx).expect("score").into_vec();
        let theta = p.params().as_slice().to_vec();
        let fd = central_difference(
            |t| {
                p.set_params(ParamVector::new(t.to_vec())).expect("length");
                p.log_prob(&x, &u, &bx).expect("log prob")
            },
            &theta,
            1e-6,
        );
        beta_worst = beta_worst.max(relative_error(&score, &fd));
    }

    let support = ActionBox::symmetric(1, 20.0).expect("support");
    let rule = GaussLegendre::new(64);
    let mut gauss_worst = 0.0f64;
    for case in 0..20 {
        let hidden: &[usize] = if case % 4 == 0 { &[] } else { &[5] };
        let mut p = Policy::gaussian(2, hidden, support.clone(), &mut rng).expect("policy");
        let last = p.num_params() - 1;
        p.params_mut()[last] = rng.uniform_range(-0.5, 0.5);
        let x = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
        let lo = rng.uniform_range(-2.0, 0.5);
        let hi = lo + rng.uniform_range(0.3, 2.5);
        let u = rng.uniform_range(lo, hi);
        let score = {
            let base = PolicyDensity::new(&p, &x, support.clone()).expect("density");
            quadrature_truncated_score(&base, u, lo, hi, &rule).expect("score").score.into_vec()
        };
        let theta = p.params().as_slice().to_vec();
        let fd = central_difference(
            |t| {
                p.set_params(ParamVector::new(t.to_vec())).expect("length");
                match p.evaluate(&x).expect("forward").dist {
                    Dist::Gaussian { mean, log_std } => truncated_normal_log_density(u, mean[0], log_std[0], lo, hi),
                    Dist::Beta(_) => unreachable!("Gaussian policy"),
                }
            },
            &theta,
            1e-6,
        );
        gauss_worst = gauss_worst.max(relative_error(&score, &fd));
    }
    (
        beta_worst <= 1e-4 && gauss_worst <= 1e-4,
        format!("worst relative error: Beta box {beta_worst:.1e}, truncated Gaussian {gauss_worst:.1e} (20 cases each)"),
    )
}

// 6

/// Uniform density on `[0, 1]`.
struct UnitUniform;

impl BaseDensity for UnitUniform {
    fn num_params(&self) -> usize {
        0
    }
    fn log_density(&self, u: &[f64]) -> safe_rpg::Result<f64> {
        Ok(if (0.0..=1.0).contains(&u[0]) { 0.0 } else { f64::NEG_INFINITY })
    }
    fn add_score(&self, _: &[f64], _: f64, _: &mut [f64]) -> safe_rpg::Result<()> {
        Ok(())
    }
    fn sample(&self, rng: &mut Rng) -> safe_rpg::Result<Vec<f64>> {
        Ok(vec![rng.uniform()])
    }
}

fn normalization_matches_closed_forms(_: &Path) -> Outcome {
    let mut rng = Rng::new(6_000);
    let mut parts = Vec::new();
    let mut passed = true;

    // A uniform base has constant density on C, so the estimate has no variance.
    for (lo, hi, truth) in [(0.2, 0.6, 0.4), (0.0, 1.0, 1.0)] {
        let set = SafeActionSet::interval(lo, hi).expect("interval");
        let est = estimate_normalization(&UnitUniform, &set, 10_000, &mut rng).expect("estimate");
        passed &= (est - truth).abs() <= 1e-12;
        parts.push(format!("uniform on [{lo}, {hi}]: {est:.6}"));
    }

    // Standard normal on [-1, 1] at M = 1e5. The per-draw value 2·φ(U) has
    // second moment 2∫φ² = (Φ(√2) − Φ(−√2)) / √π.
    let std_normal = Normal::new(0.0, 1.0).expect("normal");
    let mass = std_normal.cdf(1.0) - std_normal.cdf(-1.0);
    let second = (std_normal.cdf(SQRT_2) - std_normal.cdf(-SQRT_2)) / PI.sqrt();
    let se = ((second - mass * mass) / 1e5).sqrt();
    let support = ActionBox::symmetric(1, 20.0).expect("support");
    let mut p = Policy::gaussian(1, &[], support.clone(), &mut Rng::new(0)).expect("policy");
    p.set_params(ParamVector::zeros(p.num_params())).expect("zero params");
    let base = PolicyDensity::new(&p, &[0.0], support.clone()).expect("density");
    let set = SafeActionSet::interval(-1.0, 1.0).expect("interval");
    let est = estimate_normalization(&base, &set, 100_000, &mut rng).expect("estimate");
    let z = (est - mass) / se;
    passed &= z.abs() <= 3.0;
    parts.push(format!("N(0,1) on [-1, 1]: {est:.5} vs erf(1/sqrt2) {mass:.5} (z {z:+.2})"));

    // 200 estimates at M = 100 for a shifted, scaled normal.
    let mut p = Policy::gaussian(1, &[3], support.clone(), &mut Rng::new(61)).expect("policy");
    let last = p.num_params() - 1;
    p.params_mut()[last] = 0.3;
    let (mean, log_std) = match p.evaluate(&[0.7]).expect("forward").dist {
        Dist::Gaussian { mean, log_std } => (mean[0], log_std[0]),
        Dist::Beta(_) => unreachable!("Gaussian policy"),
    };
    let n = Normal::new(mean, log_std.exp()).expect("normal");
    let truth = n.cdf(1.5) - n.cdf(-0.5);
    let base = PolicyDensity::new(&p, &[0.7], support).expect("density");
    let set = SafeActionSet::interval(-0.5, 1.5).expect("interval");
    let xs: Vec<f64> = (0..200)
        .map(|_| estimate_normalization(&base, &set, 100, &mut rng).expect("estimate"))
        .collect();
    let (m, se) = mean_se(&xs);
    let z = (m - truth) / se;
    passed &= z.abs() <= 3.0;
    parts.push(format!("200 x M=100 on [-0.5, 1.5]: {m:.5} vs {truth:.5} (z {z:+.2})"));
    (passed, parts.join(", "))
}

// 7

/// Largest axis-aligned rectangle in `{a·u ≤ b} ∩ h` with the corner that
/// binds the halfspace on a `n × n` grid. The opposite corner is the corner
/// of `h` furthest in the `−a` direction. `None` if no grid point is feasible.
fn grid_best(a: [f64; 2], b: f64, h: &ActionBox, n: usize) -> Option<f64> {
    let (lo, hi) = (h.lower(), h.upper());
    let far = [0, 1].map(|i| if a[i] > 0.0 { lo[i] } else { hi[i] });
    let mut best: Option<f64> = None;
    for i in 0..n {
        let x = lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let y = lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64;
            if a[0] * x + a[1] * y <= b {
                let area = (x - far[0]).abs() * (y - far[1]).abs();
                best = Some(best.map_or(area, |m| m.max(area)));
            }
        }
    }
    best
}

fn maxrect_matches_grid(_: &Path) -> Outcome {
    let mut rng = Rng::new(7_000);
    let (mut solved, mut area_fail, mut corner_fail, mut errors) = (0, 0, 0, 0);
    let mut worst = f64::INFINITY;
    while solved < 500 {
        let lo = [rng.uniform_range(-5.0, 0.0), rng.uniform_range(-5.0, 0.0)];
        let hi = [lo[0] + rng.uniform_range(0.5, 8.0), lo[1] + rng.uniform_range(0.5, 8.0)];
        let h = ActionBox::new(lo.to_vec(), hi.to_vec()).expect("box");
        let a = [rng.uniform_range(-3.0, 3.0), rng.uniform_range(-3.0, 3.0)];
        let b = rng.uniform_range(-6.0, 6.0);
        // Only instances whose halfspace cuts into the box with positive area.
        let corner_min = [lo[0], hi[0]]
            .iter()
            .flat_map(|&x| [lo[1], hi[1]].map(|y| a[0] * x + a[1] * y))
            .fold(f64::INFINITY, f64::min);
        if corner_min >= b - 1e-6 {
            continue;
        }
        solved += 1;
        let best = grid_best(a, b, &h, 200).unwrap_or(0.0);
        match max_inner_hyperrectangle(&a, b, &h) {
            Ok(r) => {
                if best > 0.0 {
                    worst = worst.min(r.volume() / best);
                }
                area_fail += (r.volume() < 0.99 * best) as usize;
                let outside = r.corners().iter().any(|c| {
                    a[0] * c[0] + a[1] * c[1] > b + 1e-9 || (0..2).any(|i| c[i] < lo[i] - 1e-9 || c[i] > hi[i] + 1e-9)
                });
                corner_fail += outside as usize;
            }
            Err(_) => errors += 1,
        }
    }
    (
        area_fail == 0 && corner_fail == 0 && errors == 0,
        format!(
            "{solved} instances: {area_fail} below 99% of grid, {corner_fail} with infeasible corners, {errors} errors, worst area/grid {worst:.4}"
        ),
    )
}

// 8

fn pendulum_one_step_invariance(_: &Path) -> Outcome {
    let env = PendulumEnv::default();
    let p = &env.cbf;
    let bound = p.theta_bound;
    let mut rng = Rng::new(8_000);
    let (mut failures, mut checked, mut states, mut empty) = (0usize, 0usize, 0usize, 0usize);
    // States in the band whose safe set is empty are redrawn.
    while states < 100_000 {
        let theta = rng.uniform_range(-bound, bound);
        let theta_dot = rng.uniform_range(-env.max_speed, env.max_speed);
        let set = match pendulum_safe_interval(theta, theta_dot, p) {
            Ok(s) => s,
            Err(Error::SafeSetEmpty(_)) => {
                empty += 1;
                continue;
            }
            Err(e) => panic!("unexpected error {e}"),
        };
        let SafeSetShape::Interval { lo, hi } = *set.shape() else {
            panic!("pendulum safe sets are intervals")
        };
        states += 1;
        for u in [lo, hi, rng.uniform_range(lo, hi)] {
            let next = env.step(&PendulumState { theta, theta_dot }, &[u]).next.theta;
            let h = [theta + bound, bound - theta];
            let h_next = [next + bound, bound - next];
            let decays = (0..2).all(|i| h_next[i] >= (1.0 - p.eta) * h[i] - 1e-9);
            failures += (!decays || next.abs() > bound + 1e-9) as usize;
            checked += 1;
        }
    }
    (
        failures == 0 && checked > 0,
        format!("{failures} failures over {checked} transitions from {states} states ({empty} redrawn with an empty set)"),
    )
}

// 9

fn safe_rpg_learns(dir: &Path) -> Outcome {
    let report = default_run(EnvKind::Pendulum, Algorithm::SafeRpg, dir);
    let initial: Vec<f64> = report.replications.iter().map(|r| r.initial_eval.mean_return).collect();
    let fin: Vec<f64> = report.replications.iter().map(|r| r.final_eval.mean_return).collect();
    let (mi, mf) = (median(&initial), median(&fin));
    let gain = (mf - mi) / mi.abs();
    let iterations: Vec<u64> = report
        .replications
        .iter()
        .map(|r| r.rows.last().map_or(0, |m| m.iteration))
        .collect();

    let base = SafeRpgConfig::default();
    let rejected = [0.5, 0.3, 0.0, -1.0, 1.2, f64::NAN]
        .iter()
        .all(|&d| SafeRpgConfig { stepsize_decay: d, ..base.clone() }.validate().is_err());
    let accepted = [0.51, 0.75, 1.0]
        .iter()
        .all(|&d| SafeRpgConfig { stepsize_decay: d, ..base.clone() }.validate().is_ok());

    let passed = report.replications.len() == 5
        && iterations.iter().all(|&k| k == 2000)
        && gain >= 0.2
        && rejected
        && accepted;
    (
        passed,
        format!(
            "median return {mi:.2} -> {mf:.2}, gain {:.1}% of |initial| (need 20%), decay outside (0.5, 1] rejected: {rejected}, inside accepted: {accepted}",
            100.0 * gain
        ),
    )
}

// 10

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("csv")))
        .collect();
    files.sort();
    files
}

fn reruns_are_byte_identical(dir: &Path) -> Outcome {
    let cases = [
        (EnvKind::Pendulum, Algorithm::PpoBeta),
        (EnvKind::Pendulum, Algorithm::PpoGaussian),
        (EnvKind::Pendulum, Algorithm::SafeRpg),
        (EnvKind::Quadcopter, Algorithm::PpoBeta),
        (EnvKind::Quadcopter, Algorithm::PpoGaussianProjected),
    ];
    let mut differing = Vec::new();
    let mut files = 0;
    for (env, alg) in cases {
        let out = dir.join(format!("{env:?}_{alg:?}"));
        let mut cfg = ExperimentConfig::defaults(env, alg);
        cfg.output_dir = out.clone();
        cfg.replications = 2;
        cfg.seed = 90;
        cfg.iterations = 8;
        cfg.safe_rpg.max_iterations = 300;
        let mut runs = Vec::new();
        for _ in 0..2 {
            if out.exists() {
                fs::remove_dir_all(&out).expect("clean output");
            }
            run(&cfg).expect("run");
            runs.push(csv_bytes(&out));
        }
        files += runs[0].len();
        if runs[0].len() != 2 || runs[0] != runs[1] {
            differing.push(format!("{env:?}/{alg:?}"));
        }
    }
    (
        differing.is_empty(),
        format!("{files} CSVs compared across 5 configurations, differing: [{}]", differing.join(", ")),
    )
}
