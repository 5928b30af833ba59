//! Random-number generation and the distribution primitives the policies are
//! built from: Beta, Gamma, Gaussian and geometric sampling, plus the special
//! functions needed for densities and their derivatives.
//!
//! Every sampler takes an explicit [`Rng`]; nothing here keeps global state.

mod quadrature;
mod rng;
mod samplers;
mod special;

pub use quadrature::GaussLegendre;
pub use rng::Rng;
pub use samplers::{beta_sample, gamma_sample, gaussian_sample, geometric_sample, standard_normal};
pub use special::{digamma, log_gamma, trigamma};

use crate::error::{domain, Result};

/// Density returned at an endpoint where the Beta density diverges.
pub const BETA_PDF_CLAMP: f64 = 1e300;

/// Shape parameters of a Beta distribution on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(domain(format!(
                "Beta parameters must be positive and finite, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// `ln Γ(α+β) − ln Γ(α) − ln Γ(β)`, i.e. minus the log Beta function.
    pub fn log_norm(&self) -> f64 {
        log_gamma_unchecked(self.alpha + self.beta)
            - log_gamma_unchecked(self.alpha)
            - log_gamma_unchecked(self.beta)
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        -self.log_norm() - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
            + (a + b - 2.0) * digamma(a + b)
    }

    /// Gradient of [`entropy`](Self::entropy) with respect to `(α, β)`.
    pub fn entropy_grad(&self) -> (f64, f64) {
        let (a, b) = (self.alpha, self.beta);
        let t_ab = trigamma(a + b);
        let d_a = -(a - 1.0) * trigamma(a) + (a + b - 2.0) * t_ab;
        let d_b = -(b - 1.0) * trigamma(b) + (a + b - 2.0) * t_ab;
        (d_a, d_b)
    }
}

fn log_gamma_unchecked(z: f64) -> f64 {
    special::ln_gamma_lanczos(z)
}

/// `(a − 1)·ln x` with the conventions `0·ln 0 = 0` and `±∞` at the boundary.
fn power_term(a: f64, x: f64) -> f64 {
    if a == 1.0 {
        0.0
    } else if x == 0.0 {
        if a > 1.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        (a - 1.0) * x.ln()
    }
}

/// Log density of `Beta(α, β)` at `u ∈ [0, 1]`. May be `±∞` at the endpoints.
pub fn beta_log_pdf(u: f64, p: BetaParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(domain(format!("Beta density evaluated outside [0,1]: u={u}")));
    }
    Ok(p.log_norm() + power_term(p.alpha, u) + power_term(p.beta, 1.0 - u))
}

/// Density of `Beta(α, β)` at `u`, computed in log space. Divergent endpoints
/// return [`BETA_PDF_CLAMP`].
pub fn beta_pdf(u: f64, p: BetaParams) -> Result<f64> {
    let lp = beta_log_pdf(u, p)?;
    if lp == f64::INFINITY {
        Ok(BETA_PDF_CLAMP)
    } else {
        Ok(lp.exp().min(BETA_PDF_CLAMP))
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}
