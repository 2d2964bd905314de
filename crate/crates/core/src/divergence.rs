//! Relative entropy, total variation and power-law fits of sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::LatticeDistribution;
use crate::simplex::CompensatedSum;

/// Relative entropy, with absolute-continuity failure kept explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kl {
    Finite(f64),
    Infinite,
}

impl Kl {
    pub fn is_finite(&self) -> bool {
        matches!(self, Kl::Finite(_))
    }

    /// The value, with `Infinite` mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match *self {
            Kl::Finite(v) => v,
            Kl::Infinite => f64::INFINITY,
        }
    }
}

/// `Σ p ln(p/r)`, from log-probabilities.
///
/// Each atom contributes `p·d + r − p` with `d = ln p − ln r`, which is
/// nonnegative and sums to the divergence for normalized inputs.
pub fn kl(p: &LatticeDistribution, r: &LatticeDistribution) -> Result<Kl> {
    p.check_same_lattice(r)?;
    let mut acc = CompensatedSum::default();
    for (&lp, &lr) in p.log_probs().iter().zip(r.log_probs()) {
        if lp == f64::NEG_INFINITY {
            acc.add(lr.exp());
            continue;
        }
        if lr == f64::NEG_INFINITY {
            return Ok(Kl::Infinite);
        }
        let d = lp - lr;
        let p = lp.exp();
        if d > -1.0 {
            acc.add(p * (d + (-d).exp_m1()));
        } else {
            // r ≥ e·p: no cancellation, and e^{−d} may overflow
            acc.add(lr.exp() - p + p * d);
        }
    }
    let v = acc.value();
    Ok(Kl::Finite(if v < 0.0 { 0.0 } else { v }))
}

/// `½ Σ |p − r|`.
pub fn tv(p: &LatticeDistribution, r: &LatticeDistribution) -> Result<f64> {
    p.check_same_lattice(r)?;
    let mut acc = CompensatedSum::default();
    for (&lp, &lr) in p.log_probs().iter().zip(r.log_probs()) {
        acc.add((lp.exp() - lr.exp()).abs());
    }
    Ok((0.5 * acc.value()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub value: f64,
    pub label: String,
}

/// Labelled `(N, value)` series produced by an experiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    rows: Vec<SweepRow>,
    pub metadata: BTreeMap<String, String>,
}

/// Least-squares fit of `ln value = intercept + slope · ln N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub residual: f64,
}

impl SweepTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Appends a row; `n` must exceed every earlier `n` with the same label.
    pub fn push(&mut self, n: usize, value: f64, label: &str) -> Result<()> {
        if let Some(last) = self.rows.iter().rev().find(|r| r.label == label) {
            if n <= last.n {
                return Err(Error::InvalidParameter(format!(
                    "sweep `{label}`: N={n} does not increase past {}",
                    last.n
                )));
            }
        }
        self.rows.push(SweepRow {
            n,
            value,
            label: label.to_string(),
        });
        Ok(())
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    pub fn series(&self, label: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.label == label)
            .map(|r| (r.n, r.value))
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }

    pub fn fit_rate(&self, label: &str) -> Result<RateFit> {
        fit_rate(&self.series(label))
    }

    /// `# key=value` metadata lines, then `label,n,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("label,n,value\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.label, r.n, format_float(r.value));
        }
        out
    }
}

/// Seventeen significant digits, so values round-trip exactly.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Log-log least squares over `(N, value)` points.
pub fn fit_rate(points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::InvalidFit(format!("need at least 4 points, got {}", points.len())));
    }
    if let Some(&(n, v)) = points.iter().find(|(n, v)| !(*v > 0.0 && v.is_finite()) || *n == 0) {
        return Err(Error::InvalidFit(format!("cannot take logs at N={n}, value={v}")));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidFit("all N are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        slope,
        intercept,
        residual,
    })
}
