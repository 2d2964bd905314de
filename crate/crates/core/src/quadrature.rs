//! Quadrature rules for truncated mixing laws.
//!
//! The Gaussian rule works in whitened coordinates on the positive
//! eigenspace of `Σ`, where the density is isotropic: a product rule on the
//! unit sphere times radial Gauss–Legendre out to the boundary of the
//! (now ellipsoidal) truncation region along each direction.
//! Mass outside the ball is an atom at the origin, computed from the
//! closed-form radial tail (regularized incomplete gamma) so that the
//! normalization defect of the rule measures genuine quadrature error.

use std::f64::consts::PI;

use nalgebra::DVector;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::curie_weiss::quartic_normalizer;
use crate::error::{Error, Result};
use crate::free_energy::SpectralFactor;

const RADIAL_CUTOFF: f64 = 40.0;

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, deriv)
}

/// Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// Product rule on the unit sphere `S^{r−1} ⊂ ℝ^r` (directions, weights).
///
/// `r = 1`: the two points `±1`. `r = 2`: `n` equispaced angles.
/// `r ≥ 3`: hyperspherical angles with Gauss–Legendre in the polar angles.
fn sphere_rule(r: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    match r {
        0 => vec![(Vec::new(), 1.0)],
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..n)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / n as f64)
            })
            .collect(),
        _ => {
            // x_1 = cos φ, rest = sin φ · (point of S^{r−2})
            let (phi, wphi) = gauss_legendre_on(n, 0.0, PI);
            let inner = sphere_rule(r - 1, n);
            let mut out = Vec::with_capacity(n * inner.len());
            for (p, wp) in phi.iter().zip(&wphi) {
                let s = p.sin();
                let jac = s.powi(r as i32 - 2);
                for (dir, w) in &inner {
                    let mut v = Vec::with_capacity(r);
                    v.push(p.cos());
                    v.extend(dir.iter().map(|x| x * s));
                    out.push((v, wp * jac * w));
                }
            }
            out
        }
    }
}

/// A discrete rule for `E[f(ξ)]` where `ξ = ξ̃·1{‖ξ̃‖ ≤ R}`.
///
/// `points` are stored flattened with stride `dim`; the atom at the origin
/// is kept separately.
#[derive(Debug, Clone)]
pub struct TruncatedRule {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Mass relocated to `ξ = 0`.
    pub atom_mass: f64,
    pub radius: f64,
}

impl TruncatedRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Total mass minus one; zero up to quadrature error.
    pub fn defect(&self) -> f64 {
        let mut acc = crate::simplex::CompensatedSum::default();
        for w in &self.weights {
            acc.add(*w);
        }
        acc.add(self.atom_mass);
        acc.add(-1.0);
        acc.value()
    }

    pub fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = crate::simplex::CompensatedSum::default();
        for i in 0..self.len() {
            acc.add(self.weights[i] * f(self.point(i)));
        }
        if self.atom_mass > 0.0 {
            acc.add(self.atom_mass * f(&vec![0.0; self.dim]));
        }
        acc.value()
    }

    /// Gaussian `N(0, Σ)` truncated (set to zero) outside the radius-`R` ball.
    ///
    /// Directions with zero eigenvalue carry no randomness.
    pub fn gaussian(spectrum: &SpectralFactor, radius: f64, nodes: usize) -> Result<Self> {
        let dim = spectrum.eigenvalues.len();
        let dirs = spectrum.positive_directions();
        let r = dirs.len();
        if r == 0 {
            return Ok(Self {
                dim,
                points: vec![0.0; dim],
                weights: vec![1.0],
                atom_mass: 0.0,
                radius,
            });
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation radius must be > 0, got {radius}")));
        }
        let lambdas: Vec<f64> = dirs.iter().map(|&i| spectrum.eigenvalues[i]).collect();
        let vectors: Vec<DVector<f64>> = dirs
            .iter()
            .map(|&i| spectrum.eigenvectors.column(i).into_owned())
            .collect();
        let scales: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
        let a = 0.5 * r as f64;
        let log_norm = -a * (2.0 * PI).ln();
        // ∫_t^∞ ρ^{r−1} e^{−ρ²/2} dρ = 2^{a−1} Γ(a) Q(a, t²/2)
        let log_radial_mass = (a - 1.0) * 2f64.ln() + ln_gamma(a) + log_norm;

        let (t, wt) = gauss_legendre(nodes);
        let sphere = sphere_rule(r, nodes);
        let mut points = Vec::with_capacity(sphere.len() * nodes * dim);
        let mut weights = Vec::with_capacity(sphere.len() * nodes);
        let mut atom = 0.0;
        for (dir, wdir) in &sphere {
            // largest whitened radius along `dir` that stays in the ball
            let stretch = dir.iter().zip(&scales).map(|(w, s)| (w * s).powi(2)).sum::<f64>().sqrt();
            // beyond ρ = 40 the Gaussian weight underflows
            let rho_max = radius / stretch;
            let rho_cut = rho_max.min(RADIAL_CUTOFF);
            let mut axis = vec![0.0; dim];
            for ((u, s), v) in dir.iter().zip(&scales).zip(&vectors) {
                for k in 0..dim {
                    axis[k] += u * s * v[k];
                }
            }
            for (tj, wj) in t.iter().zip(&wt) {
                let p = 0.5 * rho_cut * (tj + 1.0);
                let wp = 0.5 * rho_cut * wj;
                weights.push(wdir * wp * p.powi(r as i32 - 1) * (log_norm - 0.5 * p * p).exp());
                points.extend(axis.iter().map(|x| x * p));
            }
            atom += wdir * log_radial_mass.exp() * gamma_ur(a, 0.5 * rho_max * rho_max);
        }
        Ok(Self {
            dim,
            points,
            weights,
            atom_mass: atom,
            radius,
        })
    }

    /// The quartic law `f₁(x) ∝ exp(−x⁴/12)` on `ℝ`, truncated at `|x| ≤ R`.
    pub fn quartic(radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation radius must be > 0, got {radius}")));
        }
        let z = quartic_normalizer();
        let (rho, wrho) = gauss_legendre_on(nodes, 0.0, radius);
        let mut points = Vec::with_capacity(2 * nodes);
        let mut weights = Vec::with_capacity(2 * nodes);
        for sign in [1.0, -1.0] {
            for (p, wp) in rho.iter().zip(&wrho) {
                points.push(sign * p);
                weights.push(wp * (-p.powi(4) / 12.0).exp() / z);
            }
        }
        // 2 ∫_R^∞ e^{−x⁴/12} dx / Z = Q(1/4, R⁴/12)
        let atom_mass = gamma_ur(0.25, radius.powi(4) / 12.0);
        Ok(Self {
            dim: 1,
            points,
            weights,
            atom_mass,
            radius,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64, 128] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            for deg in 0..(2 * n).min(40) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}: {got}");
            }
        }
    }

    #[test]
    fn sphere_rule_areas() {
        // |S^0| = 2, |S^1| = 2π, |S^2| = 4π, |S^3| = 2π²
        let area = |r: usize| sphere_rule(r, 24).iter().map(|(_, w)| w).sum::<f64>();
        assert_relative_eq!(area(1), 2.0);
        assert_relative_eq!(area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(area(3), 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(area(4), 2.0 * PI * PI, max_relative = 1e-13);
    }

    fn spectrum(sigma: DMatrix<f64>) -> SpectralFactor {
        SpectralFactor::of(&sigma).unwrap()
    }

    #[test]
    fn one_dimensional_atom_is_gaussian_tail() {
        let s = spectrum(DMatrix::from_element(1, 1, 0.25));
        let rule = TruncatedRule::gaussian(&s, 1.2, 64).unwrap();
        // erfc(1.2 / √0.5) to 30 digits
        assert_relative_eq!(rule.atom_mass, 0.016_395_071_849_192_263, max_relative = 1e-13);
        assert!(rule.defect().abs() < 1e-13);
    }

    #[test]
    fn anisotropic_rules_are_normalized() {
        let cases = [
            DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.05]),
            DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.1, 0.4, 0.05, 0.0, 0.05, 0.3]),
        ];
        for sigma in cases {
            for radius in [0.8, 2.0, 3.5] {
                let rule = TruncatedRule::gaussian(&spectrum(sigma.clone()), radius, 32).unwrap();
                assert!(rule.defect().abs() < 1e-9, "defect {} at R={radius}", rule.defect());
                assert!(rule.atom_mass >= 0.0 && rule.atom_mass < 1.0);
            }
        }
    }

    #[test]
    fn rank_deficient_covariance_lives_on_a_line() {
        // Σ = v vᵀ with v = (1, 1)/√2 · 0.6
        let v = DVector::from_vec(vec![0.6, 0.6]) / 2f64.sqrt();
        let rule = TruncatedRule::gaussian(&spectrum(&v * v.transpose()), 1.0, 32).unwrap();
        for i in 0..rule.len() {
            let p = rule.point(i);
            assert!((p[0] - p[1]).abs() < 1e-12);
        }
        assert!(rule.defect().abs() < 1e-12);
    }

    #[test]
    fn zero_covariance_is_point_mass() {
        let rule = TruncatedRule::gaussian(&spectrum(DMatrix::zeros(2, 2)), 1.0, 32).unwrap();
        assert_eq!(rule.len(), 1);
        assert_eq!(rule.expectation(|x| 3.0 + x[0]), 3.0);
    }

    #[test]
    fn quartic_rule_normalized_and_even() {
        for radius in [0.5, 1.3, 2.0, 5.0] {
            let rule = TruncatedRule::quartic(radius, 64).unwrap();
            assert!(rule.defect().abs() < 1e-13, "{}", rule.defect());
            assert!(rule.expectation(|x| x[0]).abs() < 1e-15);
        }
        let wide = TruncatedRule::quartic(8.0, 64).unwrap();
        // E x² = √12 Γ(3/4)/Γ(1/4)
        let m2 = 12f64.sqrt() * statrs::function::gamma::gamma(0.75) / statrs::function::gamma::gamma(0.25);
        assert_relative_eq!(wide.expectation(|x| x[0] * x[0]), m2, max_relative = 1e-12);
    }
}
