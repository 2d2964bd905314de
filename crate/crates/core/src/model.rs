//! Mean-field interactions `F` on the simplex and the built-in models.
//!
//! A model is a state-space size `q` plus an evaluation bundle for `F`.
//! Derivatives are taken with respect to the hat coordinates
//! `m̂ = (m_1, …, m_{q−1})`, with `m_q = 1 − |m̂|` eliminated.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Named real parameters such as `beta`, `h` or `q`.
pub type Params = BTreeMap<String, f64>;

/// Evaluation bundle for an interaction `F ∈ C²(Δ)`.
///
/// All methods receive the full coordinate vector `m` (length `q`).
pub trait Interaction: Send + Sync + fmt::Debug {
    fn value(&self, m: &[f64]) -> f64;
    /// Gradient with respect to `m̂`.
    fn gradient(&self, m: &[f64]) -> DVector<f64>;
    /// Hessian with respect to `m̂`.
    fn hessian(&self, m: &[f64]) -> DMatrix<f64>;
}

/// `F(m) = (β/2)(1 − 2m̂)² + h(1 − 2m̂)`, with `m̂` the fraction of −1 spins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurieWeiss {
    pub beta: f64,
    pub h: f64,
}

impl Interaction for CurieWeiss {
    fn value(&self, m: &[f64]) -> f64 {
        let mag = 1.0 - 2.0 * m[0];
        0.5 * self.beta * mag * mag + self.h * mag
    }

    fn gradient(&self, m: &[f64]) -> DVector<f64> {
        let mag = 1.0 - 2.0 * m[0];
        DVector::from_element(1, -2.0 * self.beta * mag - 2.0 * self.h)
    }

    fn hessian(&self, _m: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 4.0 * self.beta)
    }
}

/// Mean-field Potts interaction `F(m) = (β/2) Σ_k m_k²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potts {
    pub q: usize,
    pub beta: f64,
}

impl Interaction for Potts {
    fn value(&self, m: &[f64]) -> f64 {
        0.5 * self.beta * m.iter().map(|x| x * x).sum::<f64>()
    }

    fn gradient(&self, m: &[f64]) -> DVector<f64> {
        let last = m[self.q - 1];
        DVector::from_iterator(self.q - 1, m[..self.q - 1].iter().map(|&x| self.beta * (x - last)))
    }

    fn hessian(&self, _m: &[f64]) -> DMatrix<f64> {
        let d = self.q - 1;
        DMatrix::from_fn(d, d, |i, j| if i == j { 2.0 * self.beta } else { self.beta })
    }
}

/// A mean-field model: `q`, the interaction, and its identifying metadata.
#[derive(Clone)]
pub struct ModelSpec {
    q: usize,
    label: String,
    params: Params,
    interaction: Arc<dyn Interaction>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("q", &self.q)
            .field("label", &self.label)
            .field("params", &self.params)
            .finish()
    }
}

impl ModelSpec {
    /// Wraps a user-supplied interaction.
    pub fn new(
        q: usize,
        label: impl Into<String>,
        params: Params,
        interaction: Arc<dyn Interaction>,
    ) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!("q must be >= 2, got {q}")));
        }
        Ok(Self {
            q,
            label: label.into(),
            params,
            interaction,
        })
    }

    pub fn curie_weiss(beta: f64, h: f64) -> Result<Self> {
        check_beta(beta)?;
        if !h.is_finite() || h < 0.0 {
            return Err(Error::InvalidParameter(format!("h must be >= 0, got {h}")));
        }
        let params = Params::from([("beta".to_string(), beta), ("h".to_string(), h)]);
        Self::new(2, "curie_weiss", params, Arc::new(CurieWeiss { beta, h }))
    }

    pub fn potts(q: usize, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if q < 2 {
            return Err(Error::InvalidParameter(format!("q must be >= 2, got {q}")));
        }
        let params = Params::from([("beta".to_string(), beta), ("q".to_string(), q as f64)]);
        Self::new(q, "potts", params, Arc::new(Potts { q, beta }))
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn interaction(&self) -> &dyn Interaction {
        self.interaction.as_ref()
    }

    #[inline]
    pub fn f_value(&self, m: &[f64]) -> f64 {
        self.interaction.value(m)
    }

    pub fn f_gradient(&self, m: &[f64]) -> DVector<f64> {
        self.interaction.gradient(m)
    }

    pub fn f_hessian(&self, m: &[f64]) -> DMatrix<f64> {
        self.interaction.hessian(m)
    }

    /// Whether this is the symmetric critical Curie-Weiss point `β = 1, h = 0`.
    pub fn is_critical_curie_weiss(&self) -> bool {
        self.label == "curie_weiss"
            && self.param("beta") == Some(1.0)
            && self.param("h") == Some(0.0)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    // β = 0 is kept legal: it is the independent-spin baseline
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    Ok(())
}

/// Builds `curie_weiss` (params `beta`, `h`) or `potts` (params `beta`, `q`).
pub fn builtin_model(name: &str, params: &Params) -> Result<ModelSpec> {
    let get = |key: &str, default: Option<f64>| -> Result<f64> {
        params
            .get(key)
            .copied()
            .or(default)
            .ok_or_else(|| Error::InvalidParameter(format!("model `{name}` needs parameter `{key}`")))
    };
    match name {
        "curie_weiss" => ModelSpec::curie_weiss(get("beta", None)?, get("h", Some(0.0))?),
        "potts" => {
            let q = get("q", None)?;
            if q.fract() != 0.0 || q < 2.0 {
                return Err(Error::InvalidParameter(format!("q must be an integer >= 2, got {q}")));
            }
            ModelSpec::potts(q as usize, get("beta", None)?)
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}
