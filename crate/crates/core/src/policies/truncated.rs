//! Truncation of a base density to a safe set.
//!
//! The truncated density is `π(u)/π(C)` on `C`. Its score subtracts
//! `∇π(C)/π(C)` from the base score; both the mass and its gradient are
//! estimated from the same uniform draws in `C`, so the result is the exact
//! gradient of one realized estimate.

use super::{DistEval, Policy};
use crate::error::{check_dim, domain, Error, Result};
use crate::nets::ParamVector;
use crate::safety::{ActionBox, SafeActionSet};
use crate::stochastics::{GaussLegendre, Rng};

/// Normalization estimates below this are treated as underflow.
pub const MIN_NORMALIZATION: f64 = 1e-12;

/// A parameterized density over actions.
pub trait BaseDensity {
    fn num_params(&self) -> usize;
    fn log_density(&self, u: &[f64]) -> Result<f64>;
    /// Adds `scale · ∇θ log π(u)` into `grad`.
    fn add_score(&self, u: &[f64], scale: f64, grad: &mut [f64]) -> Result<()>;
    fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>>;

    fn density(&self, u: &[f64]) -> Result<f64> {
        Ok(self.log_density(u)?.exp())
    }
}

/// A policy evaluated at a fixed observation. For Beta policies `support` is
/// the box the distribution is scaled to; Gaussian policies ignore it and
/// are sampled without clipping.
#[derive(Debug, Clone)]
pub struct PolicyDensity<'a> {
    policy: &'a Policy,
    ev: DistEval,
    support: ActionBox,
}

impl<'a> PolicyDensity<'a> {
    pub fn new(policy: &'a Policy, x: &[f64], support: ActionBox) -> Result<Self> {
        check_dim(policy.action_dim(), support.dim())?;
        Ok(Self {
            policy,
            ev: policy.evaluate(x)?,
            support,
        })
    }
}

impl BaseDensity for PolicyDensity<'_> {
    fn num_params(&self) -> usize {
        self.policy.num_params()
    }

    fn log_density(&self, u: &[f64]) -> Result<f64> {
        self.ev.log_prob(u, &self.support)
    }

    fn add_score(&self, u: &[f64], scale: f64, grad: &mut [f64]) -> Result<()> {
        self.policy.accumulate_grad(&self.ev, u, &self.support, scale, 0.0, grad)
    }

    fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        Ok(self.policy.sample_from(&self.ev, &self.support, rng)?.1)
    }
}

/// Score of the truncated density and the normalization used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEstimate {
    pub score: ParamVector,
    pub normalization: f64,
    pub mc_samples_used: usize,
}

/// Draws from the base density until a draw lands in the set.
pub fn rejection_truncated_sample<D: BaseDensity>(
    base: &D,
    accept: impl Fn(&[f64]) -> bool,
    rng: &mut Rng,
    max_attempts: usize,
) -> Result<Vec<f64>> {
    if max_attempts == 0 {
        return Err(domain("max_attempts must be at least 1"));
    }
    for _ in 0..max_attempts {
        let u = base.sample(rng)?;
        if accept(&u) {
            return Ok(u);
        }
    }
    Err(Error::SafeSetSamplingFailed {
        attempts: max_attempts,
    })
}

fn check_mc(set: &SafeActionSet, m: usize) -> Result<()> {
    if m == 0 {
        return Err(domain("need at least one Monte Carlo sample"));
    }
    if !(set.volume() > 0.0) {
        return Err(domain("safe set has zero volume"));
    }
    Ok(())
}

/// Monte Carlo estimate `μ(C) · mean π(u_i)` with `u_i` uniform in `C`.
pub fn estimate_normalization<D: BaseDensity>(
    base: &D,
    set: &SafeActionSet,
    m: usize,
    rng: &mut Rng,
) -> Result<f64> {
    check_mc(set, m)?;
    let mut sum = 0.0;
    for _ in 0..m {
        sum += base.density(&set.uniform_sample(rng)?)?;
    }
    Ok(set.volume() * sum / m as f64)
}

/// Gauss–Legendre estimate of the mass a 1-D density puts on `[lo, hi]`.
pub fn quadrature_normalization<D: BaseDensity>(base: &D, lo: f64, hi: f64, rule: &GaussLegendre) -> Result<f64> {
    if !(lo < hi) {
        return Err(domain(format!("interval [{lo}, {hi}] has zero length")));
    }
    let mut total = 0.0;
    for (x, w) in rule.on_interval(lo, hi) {
        total += w * base.density(&[x])?;
    }
    Ok(total)
}

fn finish(base_score: Vec<f64>, mass_grad: Vec<f64>, z: f64, m: usize) -> Result<ScoreEstimate> {
    if !(z >= MIN_NORMALIZATION) {
        return Err(Error::NormalizationUnderflow(z));
    }
    let score: Vec<f64> = base_score.iter().zip(&mass_grad).map(|(s, g)| s - g / z).collect();
    if score.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("truncated score".into()));
    }
    Ok(ScoreEstimate {
        score: ParamVector::new(score),
        normalization: z,
        mc_samples_used: m,
    })
}

/// Score of the truncated density at `u ∈ C`, with the mass and its
/// gradient estimated from the same `m` uniform draws.
pub fn truncated_score<D: BaseDensity>(
    base: &D,
    u: &[f64],
    set: &SafeActionSet,
    m: usize,
    rng: &mut Rng,
) -> Result<ScoreEstimate> {
    check_mc(set, m)?;
    if !set.contains(u) {
        return Err(domain(format!("action {u:?} is outside the safe set")));
    }
    let d = base.num_params();
    let mut base_score = vec![0.0; d];
    base.add_score(u, 1.0, &mut base_score)?;
    let scale = set.volume() / m as f64;
    let mut z = 0.0;
    let mut mass_grad = vec![0.0; d];
    for _ in 0..m {
        let ui = set.uniform_sample(rng)?;
        let p = base.density(&ui)?;
        z += scale * p;
        if p > 0.0 {
            base.add_score(&ui, scale * p, &mut mass_grad)?;
        }
    }
    finish(base_score, mass_grad, z, m)
}

/// Deterministic 1-D variant of [`truncated_score`] on `[lo, hi]`.
pub fn quadrature_truncated_score<D: BaseDensity>(
    base: &D,
    u: f64,
    lo: f64,
    hi: f64,
    rule: &GaussLegendre,
) -> Result<ScoreEstimate> {
    if !(lo < hi) {
        return Err(domain(format!("interval [{lo}, {hi}] has zero length")));
    }
    if !(lo..=hi).contains(&u) {
        return Err(domain(format!("action {u} is outside [{lo}, {hi}]")));
    }
    let d = base.num_params();
    let mut base_score = vec![0.0; d];
    base.add_score(&[u], 1.0, &mut base_score)?;
    let mut z = 0.0;
    let mut mass_grad = vec![0.0; d];
    for (x, w) in rule.on_interval(lo, hi) {
        let p = base.density(&[x])?;
        z += w * p;
        if p > 0.0 {
            base.add_score(&[x], w * p, &mut mass_grad)?;
        }
    }
    finish(base_score, mass_grad, z, rule.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{central_difference, erf, ks_critical_5pct, ks_statistic, max_relative_error, mean_and_stderr};

    /// Uniform density on `[0, 1]` with no parameters.
    struct Uniform01;

    impl BaseDensity for Uniform01 {
        fn num_params(&self) -> usize {
            1
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

    fn std_gaussian(p: &mut Policy) {
        // Linear net with zero weight and bias, log std 0: N(0, 1).
        let n = p.num_params();
        p.set_params(ParamVector::zeros(n)).unwrap();
    }

    fn gaussian_policy() -> Policy {
        let mut p = Policy::gaussian(1, &[], ActionBox::symmetric(1, 15.0).unwrap(), &mut Rng::new(0)).unwrap();
        std_gaussian(&mut p);
        p
    }

    #[test]
    fn rejection_full_support_is_base() {
        let mut a = Rng::new(3);
        let mut b = Rng::new(3);
        for _ in 0..100 {
            let u = rejection_truncated_sample(&Uniform01, |_| true, &mut a, 10).unwrap();
            assert_eq!(u, Uniform01.sample(&mut b).unwrap());
        }
        let xs: Vec<f64> = (0..10_000)
            .map(|_| rejection_truncated_sample(&Uniform01, |_| true, &mut a, 10).unwrap()[0])
            .collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) < ks_critical_5pct(xs.len()));
    }

    #[test]
    fn rejection_interval_is_uniform() {
        let mut rng = Rng::new(8);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| rejection_truncated_sample(&Uniform01, |u| (0.2..=0.6).contains(&u[0]), &mut rng, 1000).unwrap()[0])
            .collect();
        assert!(xs.iter().all(|x| (0.2..=0.6).contains(x)));
        let d = ks_statistic(&xs, |x| ((x - 0.2) / 0.4).clamp(0.0, 1.0));
        assert!(d < ks_critical_5pct(xs.len()), "KS {d}");
    }

    #[test]
    fn rejection_empty_fails() {
        let r = rejection_truncated_sample(&Uniform01, |_| false, &mut Rng::new(0), 100);
        assert!(matches!(r, Err(Error::SafeSetSamplingFailed { attempts: 100 })));
        assert!(rejection_truncated_sample(&Uniform01, |_| true, &mut Rng::new(0), 0).is_err());
    }

    fn mc_batch(base: &impl BaseDensity, set: &SafeActionSet, m: usize, reps: usize, seed: u64) -> (f64, f64) {
        let mut rng = Rng::new(seed);
        let est: Vec<f64> = (0..reps)
            .map(|_| estimate_normalization(base, set, m, &mut rng).unwrap())
            .collect();
        mean_and_stderr(&est)
    }

    #[test]
    fn uniform_interval_mass() {
        let set = SafeActionSet::interval(0.2, 0.6).unwrap();
        let (m, _) = mc_batch(&Uniform01, &set, 10_000, 1, 1);
        // The density is constant on the set, so every estimate is exact.
        assert!((m - 0.4).abs() < 1e-12);
        let q = quadrature_normalization(&Uniform01, 0.2, 0.6, &GaussLegendre::new(16)).unwrap();
        assert!((q - 0.4).abs() < 1e-10);
        let full = SafeActionSet::interval(0.0, 1.0).unwrap();
        assert!((mc_batch(&Uniform01, &full, 1000, 1, 2).0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass_matches_erf() {
        let p = gaussian_policy();
        let base = PolicyDensity::new(&p, &[0.0], ActionBox::symmetric(1, 15.0).unwrap()).unwrap();
        let set = SafeActionSet::interval(-1.0, 1.0).unwrap();
        let mut rng = Rng::new(4);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| 2.0 * base.density(&set.uniform_sample(&mut rng).unwrap()).unwrap())
            .collect();
        let (m, se) = mean_and_stderr(&draws);
        let truth = erf(1.0 / 2f64.sqrt());
        assert!((m - truth).abs() <= 3.0 * se, "{m} vs {truth} (se {se})");
        let est = estimate_normalization(&base, &set, 100_000, &mut Rng::new(4)).unwrap();
        assert!((est - m).abs() < 1e-12);
        let q = quadrature_normalization(&base, -1.0, 1.0, &GaussLegendre::new(32)).unwrap();
        assert!((q - truth).abs() < 1e-12);
    }

    #[test]
    fn normalization_unbiased_against_quadrature() {
        let mut p = Policy::gaussian(1, &[3], ActionBox::symmetric(1, 15.0).unwrap(), &mut Rng::new(6)).unwrap();
        let nl = p.num_params();
        p.params_mut()[nl - 1] = 0.3;
        let base = PolicyDensity::new(&p, &[0.7], ActionBox::symmetric(1, 15.0).unwrap()).unwrap();
        let set = SafeActionSet::interval(-0.5, 1.5).unwrap();
        let (m, se) = mc_batch(&base, &set, 100, 200, 10);
        let q = quadrature_normalization(&base, -0.5, 1.5, &GaussLegendre::new(64)).unwrap();
        assert!((m - q).abs() <= 3.0 * se, "{m} vs {q}");
    }

    #[test]
    fn zero_volume_rejected() {
        let set = SafeActionSet::interval(0.3, 0.3).unwrap();
        assert!(estimate_normalization(&Uniform01, &set, 10, &mut Rng::new(0)).is_err());
        let ok = SafeActionSet::interval(0.0, 1.0).unwrap();
        assert!(estimate_normalization(&Uniform01, &ok, 0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn quadrature_score_matches_finite_differences() {
        let rule = GaussLegendre::new(64);
        let mut rng = Rng::new(33);
        for case in 0..20 {
            let mut p = Policy::gaussian(2, &[4], ActionBox::symmetric(1, 15.0).unwrap(), &mut rng).unwrap();
            let nl = p.num_params();
            p.params_mut()[nl - 1] = rng.uniform_range(-0.5, 0.5);
            let x = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
            let lo = rng.uniform_range(-2.0, 0.0);
            let hi = lo + rng.uniform_range(0.3, 2.5);
            let u = rng.uniform_range(lo, hi);
            let support = ActionBox::symmetric(1, 15.0).unwrap();
            let est = {
                let base = PolicyDensity::new(&p, &x, support.clone()).unwrap();
                quadrature_truncated_score(&base, u, lo, hi, &rule).unwrap()
            };
            let theta = p.params().as_slice().to_vec();
            let fd = central_difference(
                |t| {
                    p.set_params(ParamVector::new(t.to_vec())).unwrap();
                    let base = PolicyDensity::new(&p, &x, support.clone()).unwrap();
                    base.log_density(&[u]).unwrap() - quadrature_normalization(&base, lo, hi, &rule).unwrap().ln()
                },
                &theta,
                1e-5,
            );
            let err = max_relative_error(est.score.as_slice(), &fd, 1e-8);
            assert!(err < 1e-4, "case {case}: {err}");
        }
    }

    #[test]
    fn mc_score_is_gradient_of_realized_estimate() {
        let mut p = Policy::gaussian(1, &[3], ActionBox::symmetric(2, 15.0).unwrap(), &mut Rng::new(9)).unwrap();
        let bounds = ActionBox::symmetric(2, 2.0).unwrap();
        let set = SafeActionSet::halfspace_box(vec![1.0, 0.5], 0.8, bounds).unwrap();
        let x = [0.3];
        let u = [0.1, -0.4];
        let support = ActionBox::symmetric(2, 15.0).unwrap();
        let est = {
            let base = PolicyDensity::new(&p, &x, support.clone()).unwrap();
            truncated_score(&base, &u, &set, 64, &mut Rng::new(5)).unwrap()
        };
        let theta = p.params().as_slice().to_vec();
        let fd = central_difference(
            |t| {
                p.set_params(ParamVector::new(t.to_vec())).unwrap();
                let base = PolicyDensity::new(&p, &x, support.clone()).unwrap();
                let z = estimate_normalization(&base, &set, 64, &mut Rng::new(5)).unwrap();
                base.log_density(&u).unwrap() - z.ln()
            },
            &theta,
            1e-5,
        );
        assert!(max_relative_error(est.score.as_slice(), &fd, 1e-8) < 1e-4);
        assert_eq!(est.mc_samples_used, 64);
    }

    #[test]
    fn beta_on_its_own_box_has_unit_mass() {
        let p = Policy::beta(2, 1, &[3], &mut Rng::new(2)).unwrap();
        let bx = ActionBox::new(vec![-1.0], vec![2.0]).unwrap();
        let base = PolicyDensity::new(&p, &[0.1, 0.2], bx).unwrap();
        let q = quadrature_normalization(&base, -1.0, 2.0, &GaussLegendre::new(64)).unwrap();
        assert!((q - 1.0).abs() < 1e-3, "{q}");
    }

    #[test]
    fn underflow_detected() {
        let mut p = gaussian_policy();
        p.params_mut()[1] = 40.0;
        let base = PolicyDensity::new(&p, &[0.0], ActionBox::symmetric(1, 15.0).unwrap()).unwrap();
        let set = SafeActionSet::interval(-1.0, 1.0).unwrap();
        let r = truncated_score(&base, &[0.0], &set, 16, &mut Rng::new(0));
        assert!(matches!(r, Err(Error::NormalizationUnderflow(_))));
    }

    #[test]
    fn truncated_score_zero_mean() {
        let mut p = Policy::gaussian(1, &[], ActionBox::symmetric(1, 15.0).unwrap(), &mut Rng::new(0)).unwrap();
        p.set_params(ParamVector::new(vec![0.5, 0.2, -0.3])).unwrap();
        let support = ActionBox::symmetric(1, 15.0).unwrap();
        let x = [1.0];
        let base = PolicyDensity::new(&p, &x, support).unwrap();
        let (lo, hi) = (-0.5, 1.0);
        let rule = GaussLegendre::new(64);
        let mut rng = Rng::new(17);
        let n = 100_000;
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for _ in 0..n {
            let u = rejection_truncated_sample(&base, |u| (lo..=hi).contains(&u[0]), &mut rng, 10_000).unwrap();
            let s = quadrature_truncated_score(&base, u[0], lo, hi, &rule).unwrap();
            for (k, v) in s.score.as_slice().iter().enumerate() {
                sum[k] += v;
                sq[k] += v * v;
            }
        }
        for k in 0..3 {
            let m = sum[k] / n as f64;
            let se = ((sq[k] / n as f64 - m * m) / n as f64).sqrt();
            assert!(m.abs() <= 4.0 * se, "coordinate {k}: {m} (se {se})");
        }
    }
}
