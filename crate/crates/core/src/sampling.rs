//! Exact samplers for the Gibbs measure and the mixture, and a
//! chi-square check of sampled compositions against a lattice law.
//!
//! Samples are generated in fixed-size chunks; chunk `c` draws from the
//! ChaCha8 stream `c` of the caller's seed, so output does not depend on
//! the thread count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::free_energy::ModelAnalysis;
use crate::lattice::LatticeDistribution;
use crate::mixture::{component_radius, TruncationPolicy};
use crate::simplex::{CompensatedSum, Composition};

const SAMPLES_PER_CHUNK: usize = 4096;

/// One configuration `σ ∈ {1, …, q}^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinSample {
    q: usize,
    pub spins: Vec<u8>,
}

impl SpinSample {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn composition(&self) -> Composition {
        let mut counts = vec![0u32; self.q];
        for &s in &self.spins {
            counts[s as usize - 1] += 1;
        }
        Composition::new(counts).expect("spins are within 1..=q")
    }
}

fn chunked<T: Send>(seed: u64, count: usize, draw: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    let chunks = count.div_ceil(SAMPLES_PER_CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = SAMPLES_PER_CHUNK.min(count - c * SAMPLES_PER_CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

fn cumulative(probs: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = CompensatedSum::default();
    probs
        .into_iter()
        .map(|p| {
            acc.add(p);
            acc.value()
        })
        .collect()
}

fn draw_index(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn arrange(counts: &[u32], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut spins = Vec::with_capacity(counts.iter().map(|&c| c as usize).sum());
    for (k, &c) in counts.iter().enumerate() {
        spins.extend(std::iter::repeat_n(k as u8 + 1, c as usize));
    }
    spins.shuffle(rng);
    spins
}

/// Composition by inverse CDF, then a uniform arrangement of it.
pub fn sample_gibbs(dist: &LatticeDistribution, seed: u64, count: usize) -> Vec<SpinSample> {
    let cdf = cumulative(dist.probs());
    let index = dist.index();
    let q = dist.q();
    chunked(seed, count, |rng| SpinSample {
        q,
        spins: arrange(index.counts(draw_index(&cdf, rng)), rng),
    })
}

/// Draws from `ν_N`: a component, a truncated Gaussian shift, then iid spins.
pub fn sample_mixture(
    analysis: &ModelAnalysis,
    n: usize,
    policy: &TruncationPolicy,
    seed: u64,
    count: usize,
) -> Result<Vec<SpinSample>> {
    let q = analysis.model.q();
    let scale = (n as f64).sqrt();
    let radii: Vec<f64> = analysis
        .maximizers
        .iter()
        .map(|p| component_radius(policy, p, n, q))
        .collect::<Result<_>>()?;
    let component_cdf = cumulative(analysis.maximizers.iter().map(|p| p.weight / analysis.total_weight));
    Ok(chunked(seed, count, |rng| {
        let j = draw_index(&component_cdf, rng);
        let prof = &analysis.maximizers[j];
        let spec = &prof.sigma_spectrum;
        let mut xi = vec![0.0; q - 1];
        for i in spec.positive_directions() {
            let z: f64 = rng.sample(StandardNormal);
            let s = spec.eigenvalues[i].sqrt() * z;
            for (k, x) in xi.iter_mut().enumerate() {
                *x += s * spec.eigenvectors[(k, i)];
            }
        }
        if xi.iter().map(|x| x * x).sum::<f64>().sqrt() > radii[j] {
            xi.fill(0.0);
        }
        let centre = prof.location.probs();
        let mut probs: Vec<f64> = (0..q - 1).map(|k| centre[k] + xi[k] / scale).collect();
        probs.push(centre[q - 1] - xi.iter().sum::<f64>() / scale);
        let cdf = cumulative(probs);
        let spins = (0..n).map(|_| draw_index(&cdf, rng) as u8 + 1).collect();
        SpinSample { q, spins }
    }))
}

/// Pearson goodness-of-fit result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// The rejection threshold at the requested significance.
    pub critical_value: f64,
    pub passed: bool,
}

/// Chi-square test of sampled compositions against `dist`.
///
/// Adjacent lattice bins (in index order) are pooled until each pool expects
/// at least five samples.
pub fn chi_square_gof(samples: &[SpinSample], dist: &LatticeDistribution, alpha: f64) -> Result<GofResult> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let index = dist.index();
    let mut observed = vec![0u64; index.len()];
    for s in samples {
        let c = s.composition();
        if c.n() != dist.n() || c.q() != dist.q() {
            return Err(Error::IndexMismatch {
                left_n: c.n(),
                left_q: c.q(),
                right_n: dist.n(),
                right_q: dist.q(),
            });
        }
        observed[index.rank(c.counts()).expect("composition lies on the lattice")] += 1;
    }
    let total = samples.len() as f64;
    let mut pools: Vec<(f64, f64)> = Vec::new();
    let (mut exp, mut obs) = (0.0, 0.0);
    for (i, &o) in observed.iter().enumerate() {
        exp += total * dist.prob(i);
        obs += o as f64;
        if exp >= 5.0 {
            pools.push((exp, obs));
            exp = 0.0;
            obs = 0.0;
        }
    }
    match pools.last_mut() {
        Some(last) => {
            last.0 += exp;
            last.1 += obs;
        }
        None => pools.push((exp, obs)),
    }
    if pools.len() < 2 {
        return Err(Error::InvalidParameter("too few samples for a chi-square test".into()));
    }
    let statistic: f64 = pools.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let dof = pools.len() - 1;
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let critical_value = law.inverse_cdf(1.0 - alpha);
    Ok(GofResult {
        statistic,
        dof,
        p_value: law.sf(statistic),
        critical_value,
        passed: statistic <= critical_value,
    })
}
