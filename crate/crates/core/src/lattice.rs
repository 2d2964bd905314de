//! Exact finite-`N` objects on the simplex lattice `Δ ∩ (1/N)ℤ^q`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::simplex::{counts_to_probs, log_sum_exp, CompensatedSum, Composition, LogFactorials};

/// Default cap on the number of lattice entries.
pub const LATTICE_CAP: u128 = 20_000_000;
/// Cap on `q^N` for the configuration-space oracle.
pub const CONFIGURATION_CAP: u128 = 10_000_000;

/// All compositions of `N` into `q` parts, in lexicographic order of
/// `(c_1, …, c_{q−1})`; for `q = 2` entry `i` has `c_1 = i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeIndex {
    n: usize,
    q: usize,
    counts: Vec<u32>,
}

/// Number of compositions of `n` into `parts` parts, `C(n + parts − 1, parts − 1)`.
pub fn lattice_size(n: usize, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(n == 0);
    }
    let k = (parts - 1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n as u128 + i) / i;
    }
    acc
}

impl LatticeIndex {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.q
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    #[inline]
    pub fn counts(&self, i: usize) -> &[u32] {
        &self.counts[i * self.q..(i + 1) * self.q]
    }

    pub fn composition(&self, i: usize) -> Composition {
        Composition::new(self.counts(i).to_vec()).expect("lattice entries are valid compositions")
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.counts.chunks_exact(self.q)
    }

    /// Hat coordinates `c_k / N` for `k < q`.
    pub fn hat(&self, i: usize) -> Vec<f64> {
        let mut p = counts_to_probs(self.counts(i), self.n);
        p.pop();
        p
    }

    /// Position of a composition in the index.
    pub fn rank(&self, counts: &[u32]) -> Option<usize> {
        if counts.len() != self.q || counts.iter().map(|&c| c as usize).sum::<usize>() != self.n {
            return None;
        }
        let mut rank: u128 = 0;
        let mut remaining = self.n;
        for (i, &c) in counts[..self.q - 1].iter().enumerate() {
            let parts_after = self.q - 1 - i;
            for a in 0..c as usize {
                rank += lattice_size(remaining - a, parts_after);
            }
            remaining -= c as usize;
        }
        Some(rank as usize)
    }

    pub fn same_lattice(&self, other: &LatticeIndex) -> bool {
        self.n == other.n && self.q == other.q
    }
}

/// Enumerates the lattice, failing if it exceeds [`LATTICE_CAP`].
pub fn enumerate_lattice(n: usize, q: usize) -> Result<LatticeIndex> {
    enumerate_lattice_capped(n, q, LATTICE_CAP)
}

pub fn enumerate_lattice_capped(n: usize, q: usize, cap: u128) -> Result<LatticeIndex> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q must be >= 2, got {q}")));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!("N = {n} too large")));
    }
    let size = lattice_size(n, q);
    if size > cap {
        return Err(Error::LatticeCapExceeded { size, cap });
    }
    let mut counts = Vec::with_capacity(size as usize * q);
    let mut current = vec![0u32; q];
    fill(&mut counts, &mut current, 0, n as u32);
    Ok(LatticeIndex { n, q, counts })
}

fn fill(out: &mut Vec<u32>, current: &mut [u32], pos: usize, remaining: u32) {
    let q = current.len();
    if pos == q - 1 {
        current[pos] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for c in 0..=remaining {
        current[pos] = c;
        fill(out, current, pos + 1, remaining - c);
    }
}

/// A normalized probability vector over a lattice, stored as log-probabilities.
#[derive(Debug, Clone)]
pub struct LatticeDistribution {
    index: Arc<LatticeIndex>,
    log_probs: Vec<f64>,
    log_norm: f64,
}

impl LatticeDistribution {
    /// Normalizes unnormalized log-weights; `log_norm` is the log of their total.
    pub fn from_log_weights(index: Arc<LatticeIndex>, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != index.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for a lattice of {} entries",
                log_weights.len(),
                index.len()
            )));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::InvalidParameter("log-weights contain NaN or +inf".into()));
        }
        let log_norm = log_sum_exp(&log_weights);
        if !log_norm.is_finite() {
            return Err(Error::InvalidParameter("all weights vanish".into()));
        }
        let log_probs = log_weights.into_iter().map(|w| w - log_norm).collect();
        Ok(Self {
            index,
            log_probs,
            log_norm,
        })
    }

    pub fn index(&self) -> &LatticeIndex {
        &self.index
    }

    pub fn shared_index(&self) -> Arc<LatticeIndex> {
        Arc::clone(&self.index)
    }

    pub fn n(&self) -> usize {
        self.index.n
    }

    pub fn q(&self) -> usize {
        self.index.q
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// Log of the normalizer that was subtracted.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Pre-normalization total mass minus one.
    pub fn mass_defect(&self) -> f64 {
        self.log_norm.exp_m1()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.log_probs[i].exp()
    }

    /// `log Σ p_i`, zero for a normalized distribution.
    pub fn log_total(&self) -> f64 {
        log_sum_exp(&self.log_probs)
    }

    pub(crate) fn check_same_lattice(&self, other: &LatticeDistribution) -> Result<()> {
        if self.index.same_lattice(&other.index) {
            Ok(())
        } else {
            Err(Error::IndexMismatch {
                left_n: self.n(),
                left_q: self.q(),
                right_n: other.n(),
                right_q: other.q(),
            })
        }
    }
}

/// The pushforward `μ̃_N` with its exact `log Z_N`.
pub fn gibbs_pushforward(model: &ModelSpec, n: usize) -> Result<(LatticeDistribution, f64)> {
    let index = Arc::new(enumerate_lattice(n, model.q())?);
    let lf = LogFactorials::new(n);
    let nf = n as f64;
    let weights: Vec<f64> = (0..index.len())
        .into_par_iter()
        .map(|i| {
            let c = index.counts(i);
            let m = counts_to_probs(c, n);
            let f = model.f_value(&m);
            if f.is_finite() {
                Ok(lf.log_multinomial(c) + nf * f)
            } else {
                Err(Error::NonFiniteValue(m))
            }
        })
        .collect::<Result<_>>()?;
    let dist = LatticeDistribution::from_log_weights(index, weights)?;
    let log_z = dist.log_norm();
    Ok((dist, log_z))
}

/// Direct sum of `exp(N F(m_N(σ)))` over all `q^N` configurations.
pub fn brute_force_gibbs(model: &ModelSpec, n: usize) -> Result<(LatticeDistribution, f64)> {
    let q = model.q();
    let size = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > CONFIGURATION_CAP {
        return Err(Error::ConfigurationCapExceeded {
            size,
            cap: CONFIGURATION_CAP,
        });
    }
    let index = Arc::new(enumerate_lattice(n, q)?);
    let nf = n as f64;
    let energy: Vec<f64> = index.iter().map(|c| nf * model.f_value(&counts_to_probs(c, n))).collect();
    if let Some(i) = energy.iter().position(|e| !e.is_finite()) {
        return Err(Error::NonFiniteValue(counts_to_probs(index.counts(i), n)));
    }
    let shift = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut bins = vec![CompensatedSum::default(); index.len()];
    let mut sigma = vec![0usize; n];
    let mut counts = vec![0u32; q];
    counts[0] = n as u32;
    loop {
        let i = index.rank(&counts).expect("configuration composition is on the lattice");
        bins[i].add((energy[i] - shift).exp());
        // odometer step over {0, …, q−1}^N
        let mut pos = 0;
        loop {
            if pos == n {
                let totals: Vec<f64> = bins.iter().map(|b| b.value()).collect();
                let log_weights = totals.iter().map(|t| t.ln() + shift).collect();
                let dist = LatticeDistribution::from_log_weights(index, log_weights)?;
                let log_z = dist.log_norm();
                return Ok((dist, log_z));
            }
            counts[sigma[pos]] -= 1;
            if sigma[pos] + 1 < q {
                sigma[pos] += 1;
                counts[sigma[pos]] += 1;
                break;
            }
            sigma[pos] = 0;
            counts[0] += 1;
            pos += 1;
        }
    }
}

/// Law of the counts in a size-`k` sub-block (multivariate hypergeometric mixing).
pub fn marginal_counts(dist: &LatticeDistribution, k: usize) -> Result<LatticeDistribution> {
    let n = dist.n();
    let q = dist.q();
    if k < 1 || k > n {
        return Err(Error::MarginalOutOfRange { k, n });
    }
    if k == n {
        return Ok(dist.clone());
    }
    let source = dist.index();
    let target = Arc::new(enumerate_lattice(k, q)?);
    let lf = LogFactorials::new(n);
    let log_total = lf.log_binomial(n, k);

    // source atoms that carry no mass at double precision are skipped
    let live: Vec<usize> = (0..source.len())
        .filter(|&i| dist.log_probs[i] > f64::NEG_INFINITY)
        .collect();
    let weights: Vec<f64> = (0..target.len())
        .into_par_iter()
        .map(|t| {
            let c = target.counts(t);
            let mut terms = Vec::new();
            for &s in &live {
                let big = source.counts(s);
                if big.iter().zip(c).any(|(b, x)| b < x) {
                    continue;
                }
                let lh: f64 = big
                    .iter()
                    .zip(c)
                    .map(|(&b, &x)| lf.log_binomial(b as usize, x as usize))
                    .sum::<f64>()
                    - log_total;
                terms.push(dist.log_probs[s] + lh);
            }
            log_sum_exp(&terms)
        })
        .collect();
    LatticeDistribution::from_log_weights(target, weights)
}

/// Exact mean and covariance of `m̂` under the distribution.
pub fn moments(dist: &LatticeDistribution) -> (DVector<f64>, DMatrix<f64>) {
    let d = dist.q() - 1;
    let n = dist.n() as f64;
    let index = dist.index();
    let probs = dist.probs();
    let mut mean = DVector::zeros(d);
    for k in 0..d {
        let mut acc = CompensatedSum::default();
        for (i, p) in probs.iter().enumerate() {
            acc.add(p * index.counts(i)[k] as f64 / n);
        }
        mean[k] = acc.value();
    }
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut acc = CompensatedSum::default();
            for (i, p) in probs.iter().enumerate() {
                let c = index.counts(i);
                acc.add(p * (c[a] as f64 / n - mean[a]) * (c[b] as f64 / n - mean[b]));
            }
            cov[(a, b)] = acc.value();
            cov[(b, a)] = cov[(a, b)];
        }
    }
    (mean, cov)
}
