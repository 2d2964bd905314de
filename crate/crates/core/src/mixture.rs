//! Mixtures of product measures and their pushforwards onto the lattice.
//!
//! Every mixture here has the form `Σ_i w_i Π_k p_{ik}^{c_k}` times the
//! multinomial coefficient, where `i` runs over a finite node table
//! (quadrature nodes of all components, plus the truncation atoms). The
//! evaluator walks the lattice row by row: along a row only `c_{q−1}` and
//! `c_q` move, so each node term is updated by one multiplication and the
//! exponentials are recomputed only at the start of short segments.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free_energy::{MaximizerProfile, ModelAnalysis, SpectralFactor};
use crate::lattice::{enumerate_lattice, LatticeDistribution, LatticeIndex};
use crate::quadrature::TruncatedRule;
use crate::simplex::LogFactorials;

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_CRITICAL_DELTA: f64 = 0.04;
/// Largest tolerated pre-normalization mass defect of a pushforward.
pub const PUSHFORWARD_DEFECT_TOL: f64 = 1e-6;

const CHUNK: usize = 2048;
const SEGMENT: usize = 32;

/// Truncation radius `R_N = N^δ` of the mixing variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub delta: f64,
    /// Caps the radius so every factor probability stays at least half its centre.
    pub positivity_guard: bool,
}

impl TruncationPolicy {
    /// `0 < δ < 1/6`.
    pub fn regular(delta: f64) -> Result<Self> {
        Self::checked(delta, 1.0 / 6.0)
    }

    /// `0 < δ < 1/20`, for the critical Curie-Weiss mixture.
    pub fn critical(delta: f64) -> Result<Self> {
        Self::checked(delta, 1.0 / 20.0)
    }

    fn checked(delta: f64, upper: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < upper) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, {upper:.6}), got {delta}")));
        }
        Ok(Self {
            delta,
            positivity_guard: true,
        })
    }

    pub fn without_guard(self) -> Self {
        Self {
            positivity_guard: false,
            ..self
        }
    }

    /// The unguarded radius `N^δ`.
    pub fn radius(&self, n: usize) -> f64 {
        (n as f64).powf(self.delta)
    }

    /// Radius used around a centre with smallest coordinate `min_coord`.
    ///
    /// `ξ_q = −Σ ξ_k` can reach `√(q−1)·R`, hence the extra factor.
    pub fn radius_at(&self, n: usize, min_coord: f64, q: usize) -> f64 {
        let r = self.radius(n);
        if self.positivity_guard {
            r.min(0.5 * (n as f64).sqrt() * min_coord / ((q - 1) as f64).sqrt())
        } else {
            r
        }
    }

    /// `P(‖ξ̃‖ > R_N)` for `ξ̃ ~ N(0, Σ)`.
    pub fn atom_mass(&self, spectrum: &SpectralFactor, n: usize, quad: &QuadratureConfig) -> Result<f64> {
        Ok(TruncatedRule::gaussian(spectrum, self.radius(n), quad.nodes_per_dim)?.atom_mass)
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            positivity_guard: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub nodes_per_dim: usize,
    /// Bound on the rule's normalization defect.
    pub target_tol: f64,
}

impl QuadratureConfig {
    pub fn new(nodes_per_dim: usize, target_tol: f64) -> Result<Self> {
        if nodes_per_dim < 16 {
            return Err(Error::InvalidParameter(format!("nodes_per_dim must be >= 16, got {nodes_per_dim}")));
        }
        if !(target_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("target_tol must be > 0, got {target_tol}")));
        }
        Ok(Self {
            nodes_per_dim,
            target_tol,
        })
    }

    pub fn doubled(&self) -> Self {
        Self {
            nodes_per_dim: 2 * self.nodes_per_dim,
            ..*self
        }
    }

    fn check(&self, rule: &TruncatedRule) -> Result<()> {
        let defect = rule.defect();
        if defect.abs() > self.target_tol {
            return Err(Error::QuadratureDefect {
                defect,
                tol: self.target_tol,
            });
        }
        Ok(())
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_dim: 64,
            target_tol: 1e-9,
        }
    }
}

/// `E f(ξ)` with `ξ = ξ̃·1{‖ξ̃‖ ≤ N^δ}` and `ξ̃ ~ N(0, Σ)`.
pub fn truncated_gaussian_expectation(
    sigma: &nalgebra::DMatrix<f64>,
    policy: &TruncationPolicy,
    n: usize,
    quad: &QuadratureConfig,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let spectrum = SpectralFactor::of(sigma)?;
    let rule = TruncatedRule::gaussian(&spectrum, policy.radius(n), quad.nodes_per_dim)?;
    quad.check(&rule)?;
    Ok(rule.expectation(f))
}

/// Truncation radius around one maximizer; fails if a factor probability
/// could reach zero inside the ball.
pub(crate) fn component_radius(policy: &TruncationPolicy, prof: &MaximizerProfile, n: usize, q: usize) -> Result<f64> {
    let min_coord = prof.location.min_coordinate();
    let radius = policy.radius_at(n, min_coord, q);
    let shift = ((q - 1) as f64).sqrt() * radius / (n as f64).sqrt();
    if min_coord - shift <= 0.0 {
        return Err(Error::PositivityViolated {
            min_coordinate: min_coord,
            shift,
        });
    }
    Ok(radius)
}

/// Log-weights and per-state log-probabilities of a finite product mixture.
#[derive(Debug, Default)]
struct NodeTable {
    q: usize,
    log_weights: Vec<f64>,
    /// Stride `q`.
    log_probs: Vec<f64>,
}

impl NodeTable {
    fn new(q: usize) -> Self {
        Self {
            q,
            ..Self::default()
        }
    }

    fn len(&self) -> usize {
        self.log_weights.len()
    }

    fn push(&mut self, log_weight: f64, probs: &[f64]) {
        if log_weight == f64::NEG_INFINITY {
            return;
        }
        self.log_weights.push(log_weight);
        self.log_probs.extend(probs.iter().map(|p| p.ln()));
    }

    /// `ln Σ_i w_i Π_k p_{ik}^{c_k}` for every lattice entry, in index order.
    fn evaluate(&self, index: &LatticeIndex) -> Vec<f64> {
        let len = index.len();
        let starts: Vec<usize> = (0..len).step_by(CHUNK).collect();
        let chunks: Vec<Vec<f64>> = starts
            .into_par_iter()
            .map(|s| self.evaluate_range(index, s, (s + CHUNK).min(len)))
            .collect();
        chunks.concat()
    }

    fn evaluate_range(&self, index: &LatticeIndex, start: usize, end: usize) -> Vec<f64> {
        let q = self.q;
        let m = self.len();
        // moving one unit from state q to state q−1
        let step: Vec<f64> = (0..m)
            .map(|i| (self.log_probs[i * q + q - 2] - self.log_probs[i * q + q - 1]).exp())
            .collect();
        let mut terms = vec![0.0; m];
        let mut logs = vec![0.0; m];
        let mut shift = 0.0;
        let mut since = SEGMENT;
        let mut out = Vec::with_capacity(end - start);
        let mut prev: Option<&[u32]> = None;
        for i in start..end {
            let c = index.counts(i);
            let successor = since < SEGMENT
                && prev.is_some_and(|p| p[..q - 2] == c[..q - 2] && c[q - 2] == p[q - 2] + 1);
            if successor {
                for (t, s) in terms.iter_mut().zip(&step) {
                    *t *= s;
                }
                since += 1;
            } else {
                for (j, l) in logs.iter_mut().enumerate() {
                    let row = &self.log_probs[j * q..(j + 1) * q];
                    let mut acc = self.log_weights[j];
                    for (ck, lk) in c.iter().zip(row) {
                        if *ck > 0 {
                            acc += *ck as f64 * lk;
                        }
                    }
                    *l = acc;
                }
                shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for (t, l) in terms.iter_mut().zip(&logs) {
                    *t = (l - shift).exp();
                }
                since = 1;
            }
            let total: f64 = terms.iter().sum();
            out.push(shift + total.ln());
            prev = Some(c);
        }
        out
    }

    fn pushforward(&self, n: usize) -> Result<LatticeDistribution> {
        let index = Arc::new(enumerate_lattice(n, self.q)?);
        let lf = LogFactorials::new(n);
        let mut logs = self.evaluate(&index);
        for (i, l) in logs.iter_mut().enumerate() {
            *l += lf.log_multinomial(index.counts(i));
        }
        LatticeDistribution::from_log_weights(index, logs)
    }
}

fn check_defect(dist: LatticeDistribution) -> Result<LatticeDistribution> {
    let defect = dist.mass_defect();
    if defect.abs() > PUSHFORWARD_DEFECT_TOL {
        return Err(Error::QuadratureDefect {
            defect,
            tol: PUSHFORWARD_DEFECT_TOL,
        });
    }
    Ok(dist)
}

/// The mixing-Gaussian mixture `ν̃_N` over compositions of `N`.
pub fn mixture_pushforward(
    analysis: &ModelAnalysis,
    n: usize,
    policy: &TruncationPolicy,
    quad: &QuadratureConfig,
) -> Result<LatticeDistribution> {
    let q = analysis.model.q();
    let scale = (n as f64).sqrt();
    let mut table = NodeTable::new(q);
    let mut probs = vec![0.0; q];
    for prof in &analysis.maximizers {
        let centre = prof.location.probs();
        let radius = component_radius(policy, prof, n, q)?;
        let rule = TruncatedRule::gaussian(&prof.sigma_spectrum, radius, quad.nodes_per_dim)?;
        quad.check(&rule)?;
        let log_coeff = (prof.weight / analysis.total_weight).ln();
        let mut add = |x: &[f64], w: f64| {
            let mut sum = 0.0;
            for k in 0..q - 1 {
                probs[k] = centre[k] + x[k] / scale;
                sum += x[k];
            }
            probs[q - 1] = centre[q - 1] - sum / scale;
            table.push(log_coeff + w.ln(), &probs);
        };
        for i in 0..rule.len() {
            add(rule.point(i), rule.weights[i]);
        }
        if rule.atom_mass > 0.0 {
            add(&vec![0.0; q - 1], rule.atom_mass);
        }
    }
    check_defect(table.pushforward(n)?)
}

/// `(1/|w|) Σ_j w_j Multinomial(k, M_j)` over compositions of `k`.
pub fn product_baseline(analysis: &ModelAnalysis, k: usize) -> Result<LatticeDistribution> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let mut table = NodeTable::new(analysis.model.q());
    for prof in &analysis.maximizers {
        table.push((prof.weight / analysis.total_weight).ln(), prof.location.probs());
    }
    table.pushforward(k)
}

/// Critical Curie-Weiss mixture: spins are `±1` with probabilities
/// `½(1 ± ξ/N^{1/4})`, `ξ` drawn from `f₁ ∝ exp(−x⁴/12)` truncated at `N^δ`.
///
/// Composition entry `c_1` counts `−1` spins.
pub fn critical_cw_pushforward(
    n: usize,
    policy: &TruncationPolicy,
    quad: &QuadratureConfig,
) -> Result<LatticeDistribution> {
    if !(policy.delta < 1.0 / 20.0) {
        return Err(Error::InvalidParameter(format!("critical delta must be < 1/20, got {}", policy.delta)));
    }
    let radius = policy.radius(n);
    let scale = (n as f64).powf(0.25);
    if radius >= scale {
        return Err(Error::PositivityViolated {
            min_coordinate: 0.5,
            shift: 0.5 * radius / scale,
        });
    }
    let rule = TruncatedRule::quartic(radius, quad.nodes_per_dim)?;
    quad.check(&rule)?;
    let mut table = NodeTable::new(2);
    for i in 0..rule.len() {
        let x = rule.point(i)[0] / scale;
        table.push(rule.weights[i].ln(), &[0.5 * (1.0 - x), 0.5 * (1.0 + x)]);
    }
    table.push(rule.atom_mass.ln(), &[0.5, 0.5]);
    check_defect(table.pushforward(n)?)
}
