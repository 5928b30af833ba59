use crate::error::{check_dim, domain, Result};
use crate::stochastics::Rng;

/// Axis-aligned box `[lower, upper]` in control units.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ActionBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(domain("action box must have at least one dimension"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(domain(format!("invalid box bounds [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn symmetric(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn slack(&self, u: &[f64]) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(u)
            .map(|((l, h), x)| (x - l).min(h - x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        u.len() == self.dim() && self.slack(u) >= -tol
    }

    pub fn clip(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, h))| x.clamp(*l, *h))
            .collect()
    }

    pub fn is_subset_of(&self, other: &ActionBox, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| {
                self.lower[i] >= other.lower[i] - tol && self.upper[i] <= other.upper[i] + tol
            })
    }

    /// All `2^n` corners.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.upper[i] } else { self.lower[i] })
                    .collect()
            })
            .collect()
    }

    pub fn uniform_sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, h)| rng.uniform_range(*l, *h))
            .collect()
    }
}
