use serde::Serialize;

use crate::error::{Error, Result};

/// Negative entries above this are rounding noise and are clipped to zero.
pub const NEGATIVE_CLIP: f64 = 1e-10;
/// Largest pre-repair mass defect accepted for a valid pmf.
pub const MAX_MASS_DEFECT: f64 = 1e-6;

/// Probability mass function on `support_offset .. support_offset + probs.len()`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pmf {
    pub support_offset: usize,
    pub probs: Vec<f64>,
    /// `|1 - Σ probs|` before renormalization.
    pub mass_defect: f64,
    pub renormalized: bool,
}

impl Pmf {
    pub fn point_mass(at: usize) -> Self {
        Self {
            support_offset: at,
            probs: vec![1.0],
            mass_defect: 0.0,
            renormalized: false,
        }
    }

    /// Validates raw probabilities from a formula that should already sum to one.
    pub fn from_raw(support_offset: usize, mut probs: Vec<f64>, context: &str) -> Result<Self> {
        if let Some((i, &p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < -NEGATIVE_CLIP)
        {
            return Err(Error::IllConditioned {
                context: format!("{context}: P[{}] = {p:e}", support_offset + i),
                min_reliable_t: None,
            });
        }
        for p in probs.iter_mut() {
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        let mass_defect = (1.0 - total).abs();
        if mass_defect > MAX_MASS_DEFECT {
            return Err(Error::MassDefect {
                context: context.to_string(),
                defect: mass_defect,
            });
        }
        let renormalized = total != 1.0;
        if renormalized {
            for p in probs.iter_mut() {
                *p /= total;
            }
        }
        Ok(Self {
            support_offset,
            probs,
            mass_defect,
            renormalized,
        })
    }

    /// Normalizes non-negative weights. `tail_defect` is the mass known to be
    /// missing from the weights (e.g. a truncated mixture).
    pub fn from_weights(support_offset: usize, mut weights: Vec<f64>, tail_defect: f64) -> Self {
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        Self {
            support_offset,
            probs: weights,
            mass_defect: tail_defect,
            renormalized: true,
        }
    }

    pub fn get(&self, x: usize) -> f64 {
        x.checked_sub(self.support_offset)
            .and_then(|i| self.probs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// Largest support point plus one.
    pub fn support_end(&self) -> usize {
        self.support_offset + self.probs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.support_offset + i, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }

    /// `E[X(X-1)...(X-r+1)]`.
    pub fn factorial_moment(&self, r: usize) -> f64 {
        self.iter()
            .map(|(x, p)| {
                let f: f64 = (0..r).map(|j| x as f64 - j as f64).product();
                f * p
            })
            .sum()
    }

    pub fn cdf(&self, x: usize) -> f64 {
        self.iter().take_while(|&(v, _)| v <= x).map(|(_, p)| p).sum()
    }

    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        let lo = self.support_offset.min(other.support_offset);
        let hi = self.support_end().max(other.support_end());
        (lo..hi)
            .map(|x| (self.get(x) - other.get(x)).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let lo = self.support_offset.min(other.support_offset);
        let hi = self.support_end().max(other.support_end());
        0.5 * (lo..hi).map(|x| (self.get(x) - other.get(x)).abs()).sum::<f64>()
    }
}
