//! Points of the probability simplex, integer compositions, and the
//! log-space arithmetic shared by every other module.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Absolute tolerance on `Σ m_k = 1`.
pub const SUM_TOL: f64 = 1e-12;

/// A point `m` of the simplex `Δ = {m ∈ [0,1]^q : Σ m_k = 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidSimplexPoint(format!(
                "need at least 2 coordinates, got {}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidSimplexPoint(format!(
                "coordinate {bad} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidSimplexPoint(format!(
                "coordinates sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Completes the hat coordinates `m̂` with `m_q = 1 − |m̂|`.
    pub fn from_hat(hat: &[f64]) -> Result<Self> {
        let last = 1.0 - hat.iter().sum::<f64>();
        let mut probs = hat.to_vec();
        // a tiny negative remainder is rounding, not a real exterior point
        probs.push(if last < 0.0 && last > -SUM_TOL { 0.0 } else { last });
        Self::new(probs)
    }

    pub fn uniform(q: usize) -> Self {
        Self {
            probs: vec![1.0 / q as f64; q],
        }
    }

    pub fn q(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// The first `q − 1` coordinates.
    pub fn hat(&self) -> &[f64] {
        &self.probs[..self.probs.len() - 1]
    }

    pub fn min_coordinate(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_interior(&self) -> bool {
        self.min_coordinate() > 0.0
    }
}

/// Counts `(c_1, …, c_q)` of the `q` states among `N` spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    counts: Vec<u32>,
    n: usize,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "composition needs q >= 2 parts, got {}",
                counts.len()
            )));
        }
        let n = counts.iter().map(|&c| c as usize).sum();
        if n == 0 {
            return Err(Error::InvalidParameter("composition of N = 0".into()));
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.counts.len()
    }

    pub fn to_simplex(&self) -> SimplexPoint {
        SimplexPoint {
            probs: counts_to_probs(&self.counts, self.n),
        }
    }
}

pub(crate) fn counts_to_probs(counts: &[u32], n: usize) -> Vec<f64> {
    let inv = 1.0 / n as f64;
    counts.iter().map(|&c| c as f64 * inv).collect()
}

/// Entropy `−Σ m_k log m_k` with `0 · log 0 = 0`.
pub fn ent(m: &SimplexPoint) -> f64 {
    entropy_of(m.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// `log N! / (c_1! ⋯ c_q!)`.
pub fn log_multinomial(c: &Composition) -> f64 {
    let lf = |k: u32| ln_factorial(k as usize);
    lf(c.n() as u32) - c.counts().iter().map(|&k| lf(k)).sum::<f64>()
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// Table of `log k!` for `k = 0..=n`.
#[derive(Debug, Clone)]
pub(crate) struct LogFactorials(Vec<f64>);

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        Self((0..=n).map(ln_factorial).collect())
    }

    #[inline]
    pub fn log_multinomial(&self, counts: &[u32]) -> f64 {
        let n: usize = counts.iter().map(|&c| c as usize).sum();
        self.0[n] - counts.iter().map(|&c| self.0[c as usize]).sum::<f64>()
    }

    #[inline]
    pub fn log_binomial(&self, n: usize, k: usize) -> f64 {
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// `log Σ exp(x_i)`, reduced in slice order with compensation.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + compensated_sum(xs.iter().map(|&x| (x - max).exp())).ln()
}
