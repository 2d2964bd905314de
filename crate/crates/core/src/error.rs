use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown model `{0}` (expected `curie_weiss` or `potts`)")]
    UnknownModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid simplex point: {0}")]
    InvalidSimplexPoint(String),

    #[error("point {0:?} is not strictly inside the simplex")]
    NotInterior(Vec<f64>),

    #[error("non-finite interaction value at {0:?}")]
    NonFiniteValue(Vec<f64>),

    #[error("maximizer near {location:?} lies on the simplex boundary (isolated interior maximizers required)")]
    BoundaryMaximizer { location: Vec<f64> },

    #[error(
        "Hessian at maximizer {location:?} is degenerate: smallest eigenvalue {min_eigenvalue:e} \
         (non-degenerate Hessian required)"
    )]
    DegenerateHessian {
        location: Vec<f64>,
        min_eigenvalue: f64,
    },

    #[error("Newton ascent from {start:?} did not converge within {iterations} iterations")]
    NoConvergence { start: Vec<f64>, iterations: usize },

    #[error("mixing covariance is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("lattice with {size} entries exceeds the cap of {cap}")]
    LatticeCapExceeded { size: u128, cap: u128 },

    #[error("configuration space with {size} states exceeds the cap of {cap}")]
    ConfigurationCapExceeded { size: u128, cap: u128 },

    #[error("marginal size k={k} out of range 1..={n}")]
    MarginalOutOfRange { k: usize, n: usize },

    #[error("distributions live on different lattices (N={left_n}, q={left_q}) vs (N={right_n}, q={right_q})")]
    IndexMismatch {
        left_n: usize,
        left_q: usize,
        right_n: usize,
        right_q: usize,
    },

    #[error("quadrature normalization defect {defect:e} exceeds tolerance {tol:e}")]
    QuadratureDefect { defect: f64, tol: f64 },

    #[error("mixture factor probabilities leave (0, 1): min_k M_k = {min_coordinate}, radius/scale = {shift}")]
    PositivityViolated { min_coordinate: f64, shift: f64 },

    #[error("rate fit failed: {0}")]
    InvalidFit(String),
}
