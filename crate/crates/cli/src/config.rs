//! Experiment configuration: a TOML file plus command-line overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use mfgibbs::mixture::{DEFAULT_CRITICAL_DELTA, DEFAULT_DELTA};
use mfgibbs::{builtin_model, ModelSpec, Params, QuadratureConfig, TruncationPolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Analyze,
    Partition,
    KlSweep,
    Chaos,
    Critical,
    SampleCheck,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Analyze,
        Kind::Partition,
        Kind::KlSweep,
        Kind::Chaos,
        Kind::Critical,
        Kind::SampleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Analyze => "analyze",
            Kind::Partition => "partition",
            Kind::KlSweep => "kl-sweep",
            Kind::Chaos => "chaos",
            Kind::Critical => "critical",
            Kind::SampleCheck => "sample-check",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadrature {
    pub nodes_per_dim: usize,
    pub target_tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            nodes_per_dim: q.nodes_per_dim,
            target_tol: q.target_tol,
        }
    }
}

/// Block size for the `chaos` kind: a fixed `k`, or `k = ⌊fraction · N⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chaos {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
}

impl Default for Chaos {
    fn default() -> Self {
        Self {
            k: Some(5),
            fraction: None,
        }
    }
}

impl Chaos {
    pub fn block(&self, n: usize) -> usize {
        match (self.k, self.fraction) {
            (_, Some(f)) => ((f * n as f64).floor() as usize).max(1),
            (Some(k), None) => k,
            (None, None) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub samples: usize,
    pub alpha: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            samples: 100_000,
            alpha: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub n_list: Vec<usize>,
    /// Defaults to 0.1, or 0.04 for `critical`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default)]
    pub chaos: Chaos,
    #[serde(default)]
    pub sampling: Sampling,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: Kind::Analyze,
            model: "curie_weiss".into(),
            params: Params::from([("beta".into(), 0.5), ("h".into(), 0.0)]),
            n_list: Vec::new(),
            delta: None,
            seed: 0,
            out: None,
            quadrature: Quadrature::default(),
            chaos: Chaos::default(),
            sampling: Sampling::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid experiment config")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(match self.kind {
            Kind::Critical => DEFAULT_CRITICAL_DELTA,
            _ => DEFAULT_DELTA,
        })
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        builtin_model(&self.model, &self.params).with_context(|| format!("building model `{}`", self.model))
    }

    pub fn policy(&self) -> Result<TruncationPolicy> {
        let delta = self.delta();
        let policy = match self.kind {
            Kind::Critical => TruncationPolicy::critical(delta),
            _ => TruncationPolicy::regular(delta),
        };
        policy.with_context(|| format!("delta for kind `{}`", self.kind))
    }

    pub fn quadrature(&self) -> Result<QuadratureConfig> {
        QuadratureConfig::new(self.quadrature.nodes_per_dim, self.quadrature.target_tol).context("quadrature settings")
    }

    pub fn validate(&self) -> Result<()> {
        self.model_spec()?;
        self.policy()?;
        self.quadrature()?;
        if self.kind != Kind::Analyze {
            if self.n_list.is_empty() {
                bail!("n_list must not be empty for kind `{}`", self.kind);
            }
            if self.n_list[0] == 0 {
                bail!("n_list entries must be positive");
            }
            if let Some(w) = self.n_list.windows(2).find(|w| w[1] <= w[0]) {
                bail!("n_list must be strictly increasing ({} then {})", w[0], w[1]);
            }
        }
        if let Some(f) = self.chaos.fraction {
            if !(f > 0.0 && f <= 1.0) {
                bail!("chaos.fraction must lie in (0, 1], got {f}");
            }
        }
        if self.chaos.k == Some(0) {
            bail!("chaos.k must be >= 1");
        }
        if self.sampling.samples == 0 {
            bail!("sampling.samples must be >= 1");
        }
        if !(self.sampling.alpha > 0.0 && self.sampling.alpha < 1.0) {
            bail!("sampling.alpha must lie in (0, 1), got {}", self.sampling.alpha);
        }
        Ok(())
    }
}

/// Parses `128,256,512` or `2^7..2^14` (every power of two in the range).
pub fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let exp = |s: &str| -> Result<u32> {
            let s = s.trim();
            let e = s
                .strip_prefix("2^")
                .with_context(|| format!("range bounds must look like 2^k, got `{s}`"))?;
            e.parse().with_context(|| format!("bad exponent `{e}`"))
        };
        let (a, b) = (exp(lo)?, exp(hi)?);
        if a > b || b >= usize::BITS {
            bail!("bad power-of-two range {text}");
        }
        return Ok((a..=b).map(|e| 1usize << e).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad N `{s}`")))
        .collect()
}
