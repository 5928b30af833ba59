use super::{BetaParams, Rng};
use crate::error::{domain, Result};

/// Standard normal variate by Box–Muller.
pub fn standard_normal(rng: &mut Rng) -> f64 {
    let u1 = rng.uniform_open();
    let u2 = rng.uniform();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn gaussian_sample(mean: f64, std: f64, rng: &mut Rng) -> Result<f64> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(domain(format!("Gaussian std must be positive, got {std}")));
    }
    Ok(mean + std * standard_normal(rng))
}

/// Gamma(shape, 1) variate by Marsaglia–Tsang, boosted for `shape < 1`.
pub fn gamma_sample(shape: f64, rng: &mut Rng) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(domain(format!("Gamma shape must be positive, got {shape}")));
    }
    if shape < 1.0 {
        let g = gamma_sample(shape + 1.0, rng)?;
        return Ok(g * rng.uniform_open().powf(1.0 / shape));
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform_open();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return Ok(d * v);
        }
    }
}

/// Beta(α, β) variate as `X / (X + Y)` with independent Gamma variates.
/// Never returns an exact endpoint.
pub fn beta_sample(p: BetaParams, rng: &mut Rng) -> f64 {
    loop {
        // Shapes are validated by BetaParams, so the Gamma sampler cannot fail.
        let x = gamma_sample(p.alpha(), rng).expect("validated shape");
        let y = gamma_sample(p.beta(), rng).expect("validated shape");
        let s = x + y;
        if s > 0.0 {
            let u = x / s;
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }
}

/// Geometric variate on `{0, 1, 2, …}` with `P(T = t) = p (1 − p)^t`.
pub fn geometric_sample(p: f64, rng: &mut Rng) -> Result<u64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(domain(format!("geometric success probability must lie in (0,1], got {p}")));
    }
    if p == 1.0 {
        return Ok(0);
    }
    let u = rng.uniform_open();
    let t = (u.ln() / (1.0 - p).ln()).floor();
    Ok(if t >= u64::MAX as f64 { u64::MAX } else { t as u64 })
}
