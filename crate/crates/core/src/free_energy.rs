//! The free energy `G(m̂) = F(m) + ent(m)`, its global maximizers, and the
//! per-maximizer Laplace data (Hessian, weight, mixing covariance).

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::simplex::{entropy_of, SimplexPoint};

/// Newton iterates never get closer than this to the simplex boundary.
const BOUNDARY_CLIP: f64 = 1e-9;
/// Smallest admissible eigenvalue of `H = −Hess G` at a maximizer.
pub const MIN_HESSIAN_EIGENVALUE: f64 = 1e-6;
/// Mixing-covariance eigenvalues in `[−EIGEN_CLAMP, EIGEN_CLAMP]` are set to zero.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// Options for the multi-start maximizer search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Grid points per hat dimension (at least 8).
    pub grid_n: usize,
    /// Gradient-norm convergence threshold.
    pub tol: f64,
    /// Candidates closer than this are the same maximizer.
    pub merge_radius: f64,
    /// Fraction of grid cells (by `G` value) used as Newton starts.
    pub top_fraction: f64,
    pub max_iter: usize,
    /// Relative tie tolerance for "global": `G ≥ sup G − tie_tol·(1 + |sup G|)`.
    pub tie_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid_n: 32,
            tol: 1e-12,
            merge_radius: 1e-5,
            top_fraction: 0.05,
            max_iter: 200,
            tie_tol: 1e-8,
        }
    }
}

/// Eigen-decomposition `Σ = V diag(λ) Vᵀ` with clamped eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralFactor {
    pub eigenvalues: DVector<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralFactor {
    /// Factorizes a symmetric matrix, clamping `|λ| ≤` [`EIGEN_CLAMP`] to zero.
    pub fn of(sigma: &DMatrix<f64>) -> Result<Self> {
        let sym = (sigma + sigma.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut values = eig.eigenvalues;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -EIGEN_CLAMP {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        for v in values.iter_mut() {
            if *v <= EIGEN_CLAMP {
                *v = 0.0;
            }
        }
        Ok(Self {
            eigenvalues: values,
            eigenvectors: eig.eigenvectors,
        })
    }

    /// Indices of strictly positive eigenvalues, in decreasing order of value.
    pub fn positive_directions(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&i| self.eigenvalues[i] > 0.0)
            .collect();
        idx.sort_by(|&a, &b| self.eigenvalues[b].total_cmp(&self.eigenvalues[a]));
        idx
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > 0.0).count()
    }
}

/// One global maximizer `M_j` with its Laplace data.
#[derive(Debug, Clone)]
pub struct MaximizerProfile {
    pub location: SimplexPoint,
    /// `H = −Hess G(M̂)`.
    pub hessian: DMatrix<f64>,
    /// `w = (det H · Π_k M_k)^(−1/2)`.
    pub weight: f64,
    /// `Σ = H⁻¹ − diag(M̂) + M̂ M̂ᵀ`.
    pub sigma: DMatrix<f64>,
    pub sigma_spectrum: SpectralFactor,
    pub g_value: f64,
}

impl MaximizerProfile {
    /// Builds the profile at an interior point whose `H` is positive definite.
    pub fn at(model: &ModelSpec, hat: &[f64]) -> Result<Self> {
        let location = SimplexPoint::from_hat(hat)?;
        if location.min_coordinate() <= 0.0 {
            return Err(Error::BoundaryMaximizer { location: hat.to_vec() });
        }
        let (_, hess_g) = g_grad_hess(model, hat)?;
        let hessian = -hess_g;
        let min_eig = SymmetricEigen::new(hessian.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < MIN_HESSIAN_EIGENVALUE {
            return Err(Error::DegenerateHessian {
                location: hat.to_vec(),
                min_eigenvalue: min_eig,
            });
        }
        let det = hessian.determinant();
        let prod: f64 = location.probs().iter().product();
        let weight = (det * prod).powf(-0.5);

        let inverse = hessian
            .clone()
            .cholesky()
            .ok_or(Error::DegenerateHessian {
                location: hat.to_vec(),
                min_eigenvalue: min_eig,
            })?
            .inverse();
        let mhat = DVector::from_column_slice(hat);
        let sigma = inverse - DMatrix::from_diagonal(&mhat) + &mhat * mhat.transpose();
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let sigma_spectrum = SpectralFactor::of(&sigma)?;
        Ok(Self {
            g_value: g_value(model, hat)?,
            location,
            hessian,
            weight,
            sigma,
            sigma_spectrum,
        })
    }

    pub fn hat(&self) -> &[f64] {
        self.location.hat()
    }
}

/// All global maximizers of `G` for one model.
#[derive(Debug, Clone)]
pub struct ModelAnalysis {
    pub model: ModelSpec,
    pub maximizers: Vec<MaximizerProfile>,
    pub sup_g: f64,
    /// `|w| = Σ_j w_j`.
    pub total_weight: f64,
}

impl ModelAnalysis {
    /// Assembles an analysis from known maximizer locations.
    pub fn from_locations(model: &ModelSpec, hats: &[Vec<f64>]) -> Result<Self> {
        if hats.is_empty() {
            return Err(Error::InvalidParameter("no maximizer locations given".into()));
        }
        let maximizers = hats
            .iter()
            .map(|h| MaximizerProfile::at(model, h))
            .collect::<Result<Vec<_>>>()?;
        let sup_g = maximizers.iter().map(|p| p.g_value).fold(f64::NEG_INFINITY, f64::max);
        let total_weight = maximizers.iter().map(|p| p.weight).sum();
        Ok(Self {
            model: model.clone(),
            maximizers,
            sup_g,
            total_weight,
        })
    }

    pub fn p(&self) -> usize {
        self.maximizers.len()
    }
}

fn interior_full(model: &ModelSpec, hat: &[f64]) -> Result<Vec<f64>> {
    if hat.len() + 1 != model.q() {
        return Err(Error::InvalidParameter(format!(
            "expected {} hat coordinates, got {}",
            model.q() - 1,
            hat.len()
        )));
    }
    let last = 1.0 - hat.iter().sum::<f64>();
    if hat.iter().any(|&x| !(x > 0.0 && x < 1.0)) || !(last > 0.0 && last < 1.0) {
        return Err(Error::NotInterior(hat.to_vec()));
    }
    let mut m = hat.to_vec();
    m.push(last);
    Ok(m)
}

/// `G(m̂) = F(m) + ent(m)` at a strictly interior point.
pub fn g_value(model: &ModelSpec, mhat: &[f64]) -> Result<f64> {
    let m = interior_full(model, mhat)?;
    Ok(model.f_value(&m) + entropy_of(&m))
}

/// Analytic gradient and Hessian of `G` in the hat coordinates.
pub fn g_grad_hess(model: &ModelSpec, mhat: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let m = interior_full(model, mhat)?;
    let d = mhat.len();
    let last = m[d];
    let mut grad = model.f_gradient(&m);
    let mut hess = model.f_hessian(&m);
    for i in 0..d {
        grad[i] += (last / m[i]).ln();
        for j in 0..d {
            hess[(i, j)] -= 1.0 / last;
        }
        hess[(i, i)] -= 1.0 / m[i];
    }
    Ok((grad, hess))
}

/// Large-deviation rate `I(m) = sup G − G(m̂)`.
pub fn rate_function(analysis: &ModelAnalysis, mhat: &[f64]) -> Result<f64> {
    Ok((analysis.sup_g - g_value(&analysis.model, mhat)?).max(0.0))
}

/// Laplace asymptotics `log Z_N ≈ N sup G + log |w|`.
pub fn laplace_log_z(analysis: &ModelAnalysis, n: usize) -> f64 {
    n as f64 * analysis.sup_g + analysis.total_weight.ln()
}

/// Locates all global maximizers of `G` and validates them.
pub fn find_maximizers(model: &ModelSpec, grid_n: usize, tol: f64) -> Result<ModelAnalysis> {
    find_maximizers_with(
        model,
        &SearchOptions {
            grid_n,
            tol,
            ..SearchOptions::default()
        },
    )
}

pub fn find_maximizers_with(model: &ModelSpec, opts: &SearchOptions) -> Result<ModelAnalysis> {
    if opts.grid_n < 8 {
        return Err(Error::InvalidParameter(format!("grid_n must be >= 8, got {}", opts.grid_n)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", opts.tol)));
    }
    let grid = interior_grid(model.q() - 1, opts.grid_n);
    let values: Vec<f64> = grid
        .par_iter()
        .map(|p| g_value(model, p).unwrap_or(f64::NEG_INFINITY))
        .collect();

    let starts = select_starts(&grid, &values, opts);
    let mut candidates: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s| newton_ascent(model, s, opts))
        .collect::<Result<Vec<_>>>()?;

    candidates.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let mut merged: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, g) in candidates {
        match merged.iter_mut().find(|(y, _)| distance(&x, y) < opts.merge_radius) {
            Some(existing) => {
                if g > existing.1 {
                    *existing = (x, g);
                }
            }
            None => merged.push((x, g)),
        }
    }
    let best = merged.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let threshold = best - opts.tie_tol * (1.0 + best.abs());
    let survivors: Vec<Vec<f64>> = merged
        .into_iter()
        .filter(|(_, g)| *g >= threshold)
        .map(|(x, _)| x)
        .collect();

    ModelAnalysis::from_locations(model, &survivors)
}

/// Cell centres `(i + 1/2)/n` of the hat simplex with `m_q ≥ 1/(2n)`.
fn interior_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, n: usize, budget: usize, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        let used: f64 = prefix.iter().sum();
        for i in 0..budget {
            let x = (i as f64 + 0.5) / n as f64;
            if used + x + 0.5 / n as f64 > 1.0 + 1e-12 {
                break;
            }
            prefix.push(x);
            rec(d, n, budget, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, n, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Top cells by `G`, together with every discrete local maximum of the grid.
fn select_starts(grid: &[Vec<f64>], values: &[f64], opts: &SearchOptions) -> Vec<Vec<f64>> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(lex_cmp(&grid[a], &grid[b])));
    let top = ((grid.len() as f64 * opts.top_fraction).ceil() as usize).clamp(1, grid.len());
    let mut chosen: Vec<usize> = order[..top].to_vec();

    // Ties between mirror-image basins can leave one basin without a start
    // when the top fraction is small; local maxima of the grid fix that.
    let spacing = 1.0 / opts.grid_n as f64;
    for i in 0..grid.len() {
        if chosen.contains(&i) || values[i] == f64::NEG_INFINITY {
            continue;
        }
        let is_local_max = grid.iter().enumerate().all(|(j, p)| {
            j == i || max_abs_diff(p, &grid[i]) > spacing * 1.5 || values[j] <= values[i]
        });
        if is_local_max {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| grid[i].clone()).collect()
}

fn newton_ascent(model: &ModelSpec, start: &[f64], opts: &SearchOptions) -> Result<(Vec<f64>, f64)> {
    let mut x = start.to_vec();
    let mut g = g_value(model, &x)?;
    let mut converged_at = None;
    for iter in 0..opts.max_iter {
        let (grad, hess) = g_grad_hess(model, &x)?;
        let gnorm = grad.norm();
        if gnorm <= opts.tol {
            converged_at = Some(iter);
            break;
        }
        let step = ascent_direction(&grad, &hess);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if min_full_coordinate(&trial) > BOUNDARY_CLIP {
                let gt = g_value(model, &trial)?;
                // near the optimum the increase drops below rounding of G
                if gt >= g - 4.0 * f64::EPSILON * (1.0 + g.abs()) {
                    x = trial;
                    g = gt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if converged_at.is_none() {
        let (grad, _) = g_grad_hess(model, &x)?;
        if grad.norm() > opts.tol {
            if min_full_coordinate(&x) < 1e-6 {
                return Err(Error::BoundaryMaximizer { location: x });
            }
            return Err(Error::NoConvergence {
                start: start.to_vec(),
                iterations: opts.max_iter,
            });
        }
    }
    polish(model, &mut x, &mut g)?;
    Ok((x, g))
}

/// Extra undamped Newton steps while the gradient keeps shrinking, so that
/// flat (degenerate) maximizers are resolved to rounding level.
fn polish(model: &ModelSpec, x: &mut Vec<f64>, g: &mut f64) -> Result<()> {
    let (mut grad, mut hess) = g_grad_hess(model, x)?;
    for _ in 0..40 {
        let step = ascent_direction(&grad, &hess);
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
        if min_full_coordinate(&trial) <= BOUNDARY_CLIP {
            break;
        }
        let (tg, th) = g_grad_hess(model, &trial)?;
        if !(tg.norm() < grad.norm()) {
            break;
        }
        *x = trial;
        grad = tg;
        hess = th;
    }
    *g = g_value(model, x)?;
    Ok(())
}

/// Newton direction for ascent; regularized when `−Hess G` is not positive definite.
fn ascent_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> DVector<f64> {
    let neg = -hess;
    if let Some(ch) = neg.clone().cholesky() {
        return ch.solve(grad);
    }
    let eig = SymmetricEigen::new(neg.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max).abs();
    let shift = -min + 1e-3 * (1.0 + max);
    let n = grad.len();
    match (neg + DMatrix::identity(n, n) * shift).cholesky() {
        Some(ch) => ch.solve(grad),
        None => grad.clone(),
    }
}

fn min_full_coordinate(hat: &[f64]) -> f64 {
    let last = 1.0 - hat.iter().sum::<f64>();
    hat.iter().copied().fold(last, f64::min)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curie_weiss;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn cw(beta: f64, h: f64) -> ModelSpec {
        ModelSpec::curie_weiss(beta, h).unwrap()
    }

    #[test]
    fn g_value_examples() {
        assert_relative_eq!(g_value(&cw(0.0, 0.0), &[0.5]).unwrap(), LN_2);
        assert_relative_eq!(g_value(&cw(1.0, 0.0), &[0.5]).unwrap(), LN_2);
        let third = 1.0 / 3.0;
        let potts = ModelSpec::potts(3, 1.0).unwrap();
        assert_relative_eq!(
            g_value(&potts, &[third, third]).unwrap(),
            1.0 / 6.0 + 3f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn g_value_rejects_boundary_points() {
        assert!(matches!(g_value(&cw(1.0, 0.0), &[0.0]), Err(Error::NotInterior(_))));
        assert!(g_value(&cw(1.0, 0.0), &[1.0]).is_err());
        let potts = ModelSpec::potts(3, 1.0).unwrap();
        assert!(g_value(&potts, &[0.6, 0.4]).is_err());
        assert!(g_grad_hess(&potts, &[0.7, 0.4]).is_err());
    }

    #[test]
    fn curie_weiss_hessian_at_half() {
        for beta in [0.0, 0.3, 0.5, 0.9, 1.7] {
            let (g, h) = g_grad_hess(&cw(beta, 0.0), &[0.5]).unwrap();
            assert!(g[0].abs() < 1e-15);
            assert_relative_eq!(h[(0, 0)], -4.0 * (1.0 - beta), epsilon = 1e-13);
        }
    }

    #[test]
    fn potts_entropy_hessian_at_uniform() {
        let third = 1.0 / 3.0;
        let (_, h) = g_grad_hess(&ModelSpec::potts(3, 0.0).unwrap(), &[third, third]).unwrap();
        assert_relative_eq!(h[(0, 0)], -6.0, epsilon = 1e-12);
        assert_relative_eq!(h[(1, 1)], -6.0, epsilon = 1e-12);
        assert_relative_eq!(h[(0, 1)], -3.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let models = [cw(0.8, 0.2), ModelSpec::potts(3, 2.0).unwrap(), ModelSpec::potts(4, 1.0).unwrap()];
        let step = 1e-5;
        for model in &models {
            let d = model.q() - 1;
            for _ in 0..20 {
                let raw: Vec<f64> = (0..=d).map(|_| rng.random_range(0.1..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let x: Vec<f64> = raw[..d].iter().map(|v| v / s).collect();
                let (grad, hess) = g_grad_hess(model, &x).unwrap();
                for i in 0..d {
                    let shifted = |h: f64| {
                        let mut y = x.clone();
                        y[i] += h;
                        y
                    };
                    let fd = (g_value(model, &shifted(step)).unwrap() - g_value(model, &shifted(-step)).unwrap())
                        / (2.0 * step);
                    assert!((grad[i] - fd).abs() / fd.abs().max(1.0) < 1e-5);
                    let (gp, _) = g_grad_hess(model, &shifted(step)).unwrap();
                    let (gm, _) = g_grad_hess(model, &shifted(-step)).unwrap();
                    for j in 0..d {
                        let fd2 = (gp[j] - gm[j]) / (2.0 * step);
                        assert!((hess[(i, j)] - fd2).abs() / fd2.abs().max(1.0) < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn high_temperature_curie_weiss() {
        let a = find_maximizers(&cw(0.5, 0.0), 32, 1e-12).unwrap();
        assert_eq!(a.p(), 1);
        let m = &a.maximizers[0];
        assert_relative_eq!(m.hat()[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(m.hessian[(0, 0)], 2.0, max_relative = 1e-10);
        assert_relative_eq!(m.weight, 2f64.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(m.sigma[(0, 0)], 0.25, max_relative = 1e-10);
    }

    #[test]
    fn sigma_matches_closed_form_below_critical() {
        for i in 1..=9 {
            let beta = i as f64 / 10.0;
            let a = find_maximizers(&cw(beta, 0.0), 32, 1e-12).unwrap();
            assert_eq!(a.p(), 1);
            assert_relative_eq!(a.maximizers[0].sigma[(0, 0)], beta / (4.0 * (1.0 - beta)), epsilon = 1e-10);
        }
    }

    #[test]
    fn low_temperature_has_mirror_maximizers() {
        for beta in [1.5, 2.0, 3.0] {
            let a = find_maximizers(&cw(beta, 0.0), 32, 1e-12).unwrap();
            assert_eq!(a.p(), 2, "beta = {beta}");
            let (p, q) = (&a.maximizers[0], &a.maximizers[1]);
            assert_relative_eq!(p.hat()[0], 1.0 - q.hat()[0], epsilon = 1e-10);
            assert_relative_eq!(p.hessian[(0, 0)], q.hessian[(0, 0)], max_relative = 1e-8);
            assert_relative_eq!(p.weight, q.weight, max_relative = 1e-8);
            let m_plus = curie_weiss::m_plus(beta, 0.0);
            assert_relative_eq!(1.0 - 2.0 * p.hat()[0], m_plus, epsilon = 1e-10);
            assert_relative_eq!(p.sigma[(0, 0)], curie_weiss::mixing_variance(beta, m_plus), epsilon = 1e-8);
            assert_relative_eq!(p.hessian[(0, 0)], curie_weiss::hessian(beta, m_plus), max_relative = 1e-8);
        }
    }

    #[test]
    fn beta_two_magnetization_matches_bisection() {
        let a = find_maximizers(&cw(2.0, 0.0), 32, 1e-12).unwrap();
        let mags: Vec<f64> = a.maximizers.iter().map(|p| 1.0 - 2.0 * p.hat()[0]).collect();
        assert_relative_eq!(mags[0], 0.957_504_024_077, epsilon = 1e-9);
        assert_relative_eq!(mags[1], -0.957_504_024_077, epsilon = 1e-9);
    }

    #[test]
    fn external_field_selects_positive_magnetization() {
        let a = find_maximizers(&cw(2.0, 0.1), 32, 1e-12).unwrap();
        assert_eq!(a.p(), 1);
        let mag = 1.0 - 2.0 * a.maximizers[0].hat()[0];
        assert!(mag > 0.0);
        assert_relative_eq!(mag, curie_weiss::m_plus(2.0, 0.1), epsilon = 1e-10);
    }

    #[test]
    fn critical_point_is_rejected_as_degenerate() {
        let err = find_maximizers(&cw(1.0, 0.0), 32, 1e-12).unwrap_err();
        assert!(matches!(err, Error::DegenerateHessian { .. }), "{err:?}");
    }

    #[test]
    fn profile_identities() {
        let models = [cw(0.5, 0.0), cw(2.0, 0.0), cw(1.3, 0.4), ModelSpec::potts(3, 1.0).unwrap()];
        for model in &models {
            let a = find_maximizers(model, 32, 1e-12).unwrap();
            for p in &a.maximizers {
                assert!(p.location.min_coordinate() > 0.0);
                let d = p.hat().len();
                let mhat = DVector::from_column_slice(p.hat());
                let back = &p.sigma + DMatrix::from_diagonal(&mhat) - &mhat * mhat.transpose();
                let inv = p.hessian.clone().try_inverse().unwrap();
                assert!((back - inv).abs().max() < 1e-10);
                assert!((&p.sigma - p.sigma.transpose()).abs().max() < 1e-12);
                let prod: f64 = p.location.probs().iter().product();
                assert_relative_eq!(p.weight, (p.hessian.determinant() * prod).powf(-0.5), max_relative = 1e-10);
                assert_eq!(p.sigma_spectrum.eigenvalues.len(), d);
                assert!(p.sigma_spectrum.eigenvalues.iter().all(|&v| v >= 0.0));
                assert!(p.g_value >= a.sup_g - 1e-8);
            }
            assert!(a.total_weight > 0.0);
        }
    }

    #[test]
    fn independent_spins_need_no_mixing() {
        let a = find_maximizers(&cw(0.0, 0.0), 32, 1e-12).unwrap();
        assert_eq!(a.maximizers[0].sigma_spectrum.rank(), 0);
        assert!(a.maximizers[0].sigma[(0, 0)].abs() < 1e-12);
        let b = find_maximizers(&ModelSpec::potts(3, 0.0).unwrap(), 32, 1e-12).unwrap();
        assert_eq!(b.maximizers[0].sigma_spectrum.rank(), 0);
    }

    #[test]
    fn grid_resolution_does_not_move_maximizers() {
        let tol = 1e-12;
        for model in [cw(2.0, 0.0), cw(2.0, 0.2), ModelSpec::potts(3, 1.5).unwrap()] {
            let coarse = find_maximizers(&model, 32, tol).unwrap();
            let fine = find_maximizers(&model, 64, tol).unwrap();
            assert_eq!(coarse.p(), fine.p());
            for (a, b) in coarse.maximizers.iter().zip(&fine.maximizers) {
                assert!(distance(a.hat(), b.hat()) <= 1e-10);
            }
        }
    }

    #[test]
    fn rate_function_examples() {
        let a = find_maximizers(&cw(0.5, 0.0), 32, 1e-12).unwrap();
        assert!(rate_function(&a, a.maximizers[0].hat()).unwrap().abs() < 1e-15);
        assert!(rate_function(&a, &[0.3]).unwrap() > 0.0);

        let b = find_maximizers(&cw(2.0, 0.0), 32, 1e-12).unwrap();
        for p in &b.maximizers {
            assert!(rate_function(&b, p.hat()).unwrap() < 1e-14);
        }
        // sup G at m̃ = m⁺ minus G(1/2) = log 2
        let m = curie_weiss::m_plus(2.0, 0.0);
        let x = 0.5 * (1.0 + m);
        let expected = m * m - x * x.ln() - (1.0 - x) * (1.0 - x).ln() - LN_2;
        assert_relative_eq!(rate_function(&b, &[0.5]).unwrap(), expected, max_relative = 1e-10);
        assert_relative_eq!(expected, 0.326_523_887_426_9, max_relative = 1e-9);
    }

    #[test]
    fn laplace_log_z_examples() {
        let a = find_maximizers(&cw(0.5, 0.0), 32, 1e-12).unwrap();
        assert_relative_eq!(laplace_log_z(&a, 1000), 1000.0 * a.sup_g + 2f64.sqrt().ln(), max_relative = 1e-12);
        let iid = find_maximizers(&cw(0.0, 0.0), 32, 1e-12).unwrap();
        assert_relative_eq!(iid.maximizers[0].weight, 1.0, max_relative = 1e-12);
        for n in [1, 10, 1000] {
            assert_relative_eq!(laplace_log_z(&iid, n), n as f64 * LN_2, max_relative = 1e-12);
        }
    }

    #[test]
    fn search_option_validation() {
        assert!(find_maximizers(&cw(0.5, 0.0), 4, 1e-10).is_err());
        assert!(find_maximizers(&cw(0.5, 0.0), 16, 0.0).is_err());
    }
}
