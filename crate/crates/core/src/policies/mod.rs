//! Stochastic policies over continuous actions.
//!
//! [`Policy`] wraps an MLP whose heads parameterize either a box-scaled Beta
//! distribution or a Gaussian with a state-independent log standard
//! deviation. [`truncated`] renormalizes any base density to a safe set and
//! provides the Monte Carlo score of the truncated density.

mod checkpoint;
pub mod truncated;

pub use checkpoint::{load_policy, save_policy, PolicyMetadata};
pub use truncated::{
    estimate_normalization, quadrature_normalization, quadrature_truncated_score,
    rejection_truncated_sample, truncated_score, BaseDensity, PolicyDensity, ScoreEstimate,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nets::{HeadSpec, MlpSpec, OutputTransform, ParamVector, Trace};
use crate::safety::ActionBox;
use crate::stochastics::{beta_log_pdf, beta_sample, standard_normal, BetaParams, Rng};

/// Distance kept from a box face when evaluating Beta log-densities.
pub const FACE_NUDGE: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyFamily {
    /// Independent Beta per coordinate, rescaled to a per-state box.
    BetaBox,
    /// Diagonal Gaussian clipped to a fixed box when acting.
    GaussianClipped,
}

/// Network and distribution parameters for a policy.
///
/// For [`PolicyFamily::GaussianClipped`] the last `n` parameters are the
/// log standard deviations; the rest belong to the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    family: PolicyFamily,
    spec: MlpSpec,
    params: ParamVector,
    clip_box: Option<ActionBox>,
}

/// Per-state distribution parameters produced by one forward pass.
#[derive(Debug, Clone)]
pub enum Dist {
    Beta(Vec<BetaParams>),
    Gaussian { mean: Vec<f64>, log_std: Vec<f64> },
}

/// A forward pass kept for a later gradient computation.
#[derive(Debug, Clone)]
pub struct DistEval {
    trace: Trace,
    pub dist: Dist,
}

impl Policy {
    /// Beta policy with `α, β = softplus(·) + 1` heads.
    pub fn beta(obs_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self> {
        let spec = MlpSpec::with_hidden(
            obs_dim,
            hidden,
            vec![
                HeadSpec::new("alpha", action_dim, OutputTransform::SoftplusPlusOne),
                HeadSpec::new("beta", action_dim, OutputTransform::SoftplusPlusOne),
            ],
        )?;
        let params = spec.init_params(rng);
        Ok(Self {
            family: PolicyFamily::BetaBox,
            spec,
            params,
            clip_box: None,
        })
    }

    /// Gaussian policy with log standard deviations initialized to zero.
    pub fn gaussian(
        obs_dim: usize,
        hidden: &[usize],
        clip_box: ActionBox,
        rng: &mut Rng,
    ) -> Result<Self> {
        let n = clip_box.dim();
        let spec = MlpSpec::with_hidden(obs_dim, hidden, vec![HeadSpec::new("mean", n, OutputTransform::Identity)])?;
        let mut values = spec.init_params(rng).into_vec();
        values.extend(std::iter::repeat(0.0).take(n));
        Ok(Self {
            family: PolicyFamily::GaussianClipped,
            spec,
            params: ParamVector::new(values),
            clip_box: Some(clip_box),
        })
    }

    /// Reassembles a policy from its parts, checking shapes.
    pub fn from_parts(
        family: PolicyFamily,
        spec: MlpSpec,
        params: ParamVector,
        clip_box: Option<ActionBox>,
    ) -> Result<Self> {
        let n = match family {
            PolicyFamily::BetaBox => {
                let a = spec.head_range("alpha");
                let b = spec.head_range("beta");
                match (a, b) {
                    (Some(a), Some(b)) if a.len() == b.len() && spec.heads().len() == 2 => a.len(),
                    _ => return Err(Error::InvalidConfig("Beta policy needs alpha and beta heads of equal size".into())),
                }
            }
            PolicyFamily::GaussianClipped => {
                let m = spec
                    .head_range("mean")
                    .filter(|_| spec.heads().len() == 1)
                    .ok_or_else(|| Error::InvalidConfig("Gaussian policy needs a single mean head".into()))?;
                let cb = clip_box
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("Gaussian policy needs a clip box".into()))?;
                check_dim(m.len(), cb.dim())?;
                m.len()
            }
        };
        let extra = if family == PolicyFamily::GaussianClipped { n } else { 0 };
        check_dim(spec.num_params() + extra, params.len())?;
        Ok(Self {
            family,
            spec,
            params,
            clip_box: if family == PolicyFamily::GaussianClipped { clip_box } else { None },
        })
    }

    pub fn family(&self) -> PolicyFamily {
        self.family
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn set_params(&mut self, params: ParamVector) -> Result<()> {
        check_dim(self.params.len(), params.len())?;
        self.params = params;
        Ok(())
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.params.as_mut_slice()
    }

    pub fn clip_box(&self) -> Option<&ActionBox> {
        self.clip_box.as_ref()
    }

    pub fn action_dim(&self) -> usize {
        match self.family {
            PolicyFamily::BetaBox => self.spec.output_dim() / 2,
            PolicyFamily::GaussianClipped => self.spec.output_dim(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn net_params(&self) -> &[f64] {
        &self.params.as_slice()[..self.spec.num_params()]
    }

    /// Forward pass producing the distribution at observation `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<DistEval> {
        let trace = self.spec.forward_trace(self.net_params(), x)?;
        let out = trace.output();
        let n = self.action_dim();
        let dist = match self.family {
            PolicyFamily::BetaBox => Dist::Beta(
                (0..n)
                    .map(|i| BetaParams::new(out[i], out[n + i]))
                    .collect::<Result<_>>()?,
            ),
            PolicyFamily::GaussianClipped => Dist::Gaussian {
                mean: out.to_vec(),
                log_std: self.params.as_slice()[self.spec.num_params()..].to_vec(),
            },
        };
        Ok(DistEval { trace, dist })
    }

    /// Draws an action. Beta policies fill `bx`; Gaussian policies ignore it
    /// and clip to their fixed box.
    pub fn sample(&self, x: &[f64], bx: &ActionBox, rng: &mut Rng) -> Result<Vec<f64>> {
        let ev = self.evaluate(x)?;
        Ok(self.sample_from(&ev, bx, rng)?.0)
    }

    /// Draws from an evaluated distribution. Returns the action to apply and
    /// the raw draw whose density the log-probability refers to (they differ
    /// only by Gaussian clipping).
    pub fn sample_from(&self, ev: &DistEval, bx: &ActionBox, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
        match &ev.dist {
            Dist::Beta(ps) => {
                check_dim(ps.len(), bx.dim())?;
                let u: Vec<f64> = ps
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let (lo, hi) = (bx.lower()[i], bx.upper()[i]);
                        if hi == lo {
                            lo
                        } else {
                            (lo + beta_sample(*p, rng) * (hi - lo)).clamp(lo, hi)
                        }
                    })
                    .collect();
                Ok((u.clone(), u))
            }
            Dist::Gaussian { mean, log_std } => {
                let raw: Vec<f64> = mean
                    .iter()
                    .zip(log_std)
                    .map(|(m, ls)| m + ls.exp() * standard_normal(rng))
                    .collect();
                let clip = self.clip_box.as_ref().expect("Gaussian policy has a clip box");
                Ok((clip.clip(&raw), raw))
            }
        }
    }

    /// Deterministic action: the Beta mean mapped into `bx`, or the clipped
    /// Gaussian mean.
    pub fn mean_action(&self, x: &[f64], bx: &ActionBox) -> Result<Vec<f64>> {
        let ev = self.evaluate(x)?;
        match &ev.dist {
            Dist::Beta(ps) => {
                check_dim(ps.len(), bx.dim())?;
                Ok(ps
                    .iter()
                    .enumerate()
                    .map(|(i, p)| bx.lower()[i] + p.mean() * bx.width(i))
                    .collect())
            }
            Dist::Gaussian { mean, .. } => Ok(self.clip_box.as_ref().expect("clip box").clip(mean)),
        }
    }

    /// Log-density of `u`. For Beta policies this is the density of the
    /// box-scaled variable and `-∞` outside `bx`; Gaussian policies use the
    /// unclipped normal density and ignore `bx`.
    pub fn log_prob(&self, x: &[f64], u: &[f64], bx: &ActionBox) -> Result<f64> {
        let ev = self.evaluate(x)?;
        ev.log_prob(u, bx)
    }

    /// Gradient of [`Policy::log_prob`] with respect to all parameters.
    pub fn score(&self, x: &[f64], u: &[f64], bx: &ActionBox) -> Result<ParamVector> {
        let ev = self.evaluate(x)?;
        if self.family == PolicyFamily::BetaBox && !bx.contains(u, 0.0) {
            return Err(crate::error::domain(format!("action {u:?} lies outside the policy box")));
        }
        let mut grad = vec![0.0; self.num_params()];
        self.accumulate_grad(&ev, u, bx, 1.0, 0.0, &mut grad)?;
        Ok(ParamVector::new(grad))
    }

    /// Entropy of the action distribution at `x` (box-scaled for Beta).
    pub fn entropy(&self, x: &[f64], bx: &ActionBox) -> Result<f64> {
        Ok(self.evaluate(x)?.entropy(bx))
    }

    /// Adds `w_logp · ∇log π(u|x) + w_ent · ∇H(π(·|x))` into `grad`.
    pub fn accumulate_grad(
        &self,
        ev: &DistEval,
        u: &[f64],
        bx: &ActionBox,
        w_logp: f64,
        w_ent: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        check_dim(self.num_params(), grad.len())?;
        let net_len = self.spec.num_params();
        match &ev.dist {
            Dist::Beta(ps) => {
                let n = ps.len();
                check_dim(n, u.len())?;
                let mut upstream = vec![0.0; 2 * n];
                for (i, p) in ps.iter().enumerate() {
                    let (lo, w) = (bx.lower()[i], bx.width(i));
                    if w == 0.0 {
                        continue;
                    }
                    let s = nudge((u[i] - lo) / w);
                    let (dga, dgb) = (crate::stochastics::digamma(p.alpha()), crate::stochastics::digamma(p.beta()));
                    let dgab = crate::stochastics::digamma(p.alpha() + p.beta());
                    let (ea, eb) = p.entropy_grad();
                    upstream[i] = w_logp * (s.ln() - dga + dgab) + w_ent * ea;
                    upstream[n + i] = w_logp * ((1.0 - s).ln() - dgb + dgab) + w_ent * eb;
                }
                self.spec
                    .backward_into(self.net_params(), &ev.trace, &upstream, 1.0, &mut grad[..net_len])
            }
            Dist::Gaussian { mean, log_std } => {
                check_dim(mean.len(), u.len())?;
                let mut upstream = vec![0.0; mean.len()];
                for i in 0..mean.len() {
                    let inv_var = (-2.0 * log_std[i]).exp();
                    let d = u[i] - mean[i];
                    upstream[i] = w_logp * d * inv_var;
                    grad[net_len + i] += w_logp * (d * d * inv_var - 1.0) + w_ent;
                }
                self.spec
                    .backward_into(self.net_params(), &ev.trace, &upstream, 1.0, &mut grad[..net_len])
            }
        }
    }
}

fn nudge(s: f64) -> f64 {
    s.clamp(FACE_NUDGE, 1.0 - FACE_NUDGE)
}

impl DistEval {
    pub fn log_prob(&self, u: &[f64], bx: &ActionBox) -> Result<f64> {
        match &self.dist {
            Dist::Beta(ps) => {
                check_dim(ps.len(), u.len())?;
                check_dim(ps.len(), bx.dim())?;
                let mut total = 0.0;
                for (i, p) in ps.iter().enumerate() {
                    let (lo, w) = (bx.lower()[i], bx.width(i));
                    if w == 0.0 {
                        continue;
                    }
                    let s = (u[i] - lo) / w;
                    if !(0.0..=1.0).contains(&s) {
                        return Ok(f64::NEG_INFINITY);
                    }
                    total += beta_log_pdf(nudge(s), *p)? - w.ln();
                }
                Ok(total)
            }
            Dist::Gaussian { mean, log_std } => {
                check_dim(mean.len(), u.len())?;
                Ok(mean
                    .iter()
                    .zip(log_std)
                    .zip(u)
                    .map(|((m, ls), x)| {
                        let z = (x - m) * (-ls).exp();
                        -0.5 * z * z - ls - 0.5 * LN_2PI
                    })
                    .sum())
            }
        }
    }

    pub fn entropy(&self, bx: &ActionBox) -> f64 {
        match &self.dist {
            Dist::Beta(ps) => ps
                .iter()
                .enumerate()
                .filter(|(i, _)| bx.width(*i) > 0.0)
                .map(|(i, p)| p.entropy() + bx.width(i).ln())
                .sum(),
            Dist::Gaussian { log_std, .. } => log_std.iter().map(|ls| 0.5 * (LN_2PI + 1.0) + ls).sum(),
        }
    }
}
