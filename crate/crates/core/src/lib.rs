//! Finite-size mixture approximations of mean-field Gibbs measures.
//!
//! A mean-field measure on `[q]^N` has density `exp(N F(m_N(σ)))`, where
//! `m_N` is the empirical distribution of the spins. Everything here works
//! on compositions (count vectors), where the measure is exactly
//! computable, and compares it against mixtures of product measures
//! centred at the maximizers of `F + ent`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curie_weiss;
pub mod divergence;
pub mod error;
pub mod free_energy;
pub mod lattice;
pub mod mixture;
pub mod model;
pub mod quadrature;
pub mod sampling;
pub mod simplex;

pub use divergence::{fit_rate, kl, tv, Kl, RateFit, SweepTable};
pub use error::{Error, Result};
pub use free_energy::{
    find_maximizers, find_maximizers_with, g_value, laplace_log_z, rate_function, MaximizerProfile, ModelAnalysis,
    SearchOptions, SpectralFactor,
};
pub use lattice::{
    brute_force_gibbs, enumerate_lattice, gibbs_pushforward, marginal_counts, moments, LatticeDistribution,
    LatticeIndex,
};
pub use mixture::{
    critical_cw_pushforward, mixture_pushforward, product_baseline, truncated_gaussian_expectation, QuadratureConfig,
    TruncationPolicy,
};
pub use model::{builtin_model, Interaction, ModelSpec, Params};
pub use sampling::{chi_square_gof, sample_gibbs, sample_mixture, GofResult, SpinSample};
pub use simplex::{ent, log_multinomial, Composition, SimplexPoint};
