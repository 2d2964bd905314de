//! Closed-form Curie-Weiss quantities, written in the magnetization
//! `m̃ = 1 − 2m̂ ∈ [−1, 1]`.
//!
//! These are independent of the generic maximizer search and serve as
//! cross-checks for it.

use statrs::function::gamma::gamma;

/// Largest solution of `z = tanh(βz + h)`.
///
/// For `h = 0, β ≤ 1` this is `0`.
pub fn m_plus(beta: f64, h: f64) -> f64 {
    let f = |z: f64| z - (beta * z + h).tanh();
    let mut lo = if h > 0.0 { 0.0 } else { f64::MIN_POSITIVE };
    if f(lo) >= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `H = −G''` at the maximizer with magnetization `m`:
/// `4(1 − β(1 − m²)) / (1 − m²)`.
pub fn hessian(beta: f64, m: f64) -> f64 {
    let s = 1.0 - m * m;
    4.0 * (1.0 - beta * s) / s
}

/// Variance of the (hat-coordinate) mixing Gaussian:
/// `β(1 − m²)² / (4 − 4β(1 − m²))`.
pub fn mixing_variance(beta: f64, m: f64) -> f64 {
    let s = 1.0 - m * m;
    beta * s * s / (4.0 - 4.0 * beta * s)
}

/// `∫ exp(−y⁴/12) dy = 12^{1/4} Γ(1/4) / 2`.
pub fn quartic_normalizer() -> f64 {
    12f64.powf(0.25) * gamma(0.25) / 2.0
}

/// Density `f₁(x) = exp(−x⁴/12) / ∫ exp(−y⁴/12) dy` of the critical
/// fluctuation limit of `N^{1/4} m̃`.
pub fn quartic_density(x: f64) -> f64 {
    (-x.powi(4) / 12.0).exp() / quartic_normalizer()
}

/// Limit of `Z_N / (2^N N^{1/4})` at `β = 1, h = 0`:
/// `(2π)^{−1/2} ∫ exp(−u⁴/12) du = 3^{1/4} Γ(1/4) / (2√π)`.
pub fn critical_partition_constant() -> f64 {
    3f64.powf(0.25) * gamma(0.25) / (2.0 * std::f64::consts::PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn magnetization_solves_fixed_point() {
        for (beta, h) in [(2.0, 0.0), (1.2, 0.0), (0.5, 0.3), (2.0, 0.2), (3.0, 0.01)] {
            let m = m_plus(beta, h);
            assert!(m > 0.0);
            assert!((m - (beta * m + h).tanh()).abs() < 1e-14);
        }
        assert_eq!(m_plus(0.5, 0.0), 0.0);
        assert_eq!(m_plus(1.0, 0.0), 0.0);
        assert_relative_eq!(m_plus(2.0, 0.0), 0.957_504_024_077_268_7, epsilon = 1e-14);
    }

    #[test]
    fn mixing_variance_forms_agree() {
        // r² = ¼((1 − m²)/(1 − β(1 − m²)) + m² − 1)
        for beta in [1.5, 2.0, 4.0] {
            let m = m_plus(beta, 0.0);
            let s = 1.0 - m * m;
            let first = 0.25 * (s / (1.0 - beta * s) + m * m - 1.0);
            assert_relative_eq!(first, mixing_variance(beta, m), max_relative = 1e-10);
            assert_relative_eq!(1.0 / hessian(beta, m) - 0.25 * s, mixing_variance(beta, m), max_relative = 1e-10);
        }
        // m = 0 recovers the high-temperature value β / (4(1 − β))
        assert_relative_eq!(mixing_variance(0.5, 0.0), 0.25);
        assert_relative_eq!(hessian(0.5, 0.0), 2.0);
    }

    #[test]
    fn quartic_normalizer_matches_quadrature() {
        // composite Simpson on [-8, 8]; tails beyond are < e^{-341}
        let n = 4000;
        let (a, b) = (-8.0f64, 8.0f64);
        let h = (b - a) / n as f64;
        let f = |x: f64| (-x.powi(4) / 12.0).exp();
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let simpson = s * h / 3.0;
        assert_relative_eq!(quartic_normalizer(), simpson, max_relative = 1e-12);
        assert_relative_eq!(quartic_normalizer(), 3.3740, epsilon = 1e-4);
    }

    #[test]
    fn critical_constant_value() {
        assert_relative_eq!(critical_partition_constant(), quartic_normalizer() / (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(critical_partition_constant(), 1.346_035_322_408, epsilon = 1e-11);
    }
}
