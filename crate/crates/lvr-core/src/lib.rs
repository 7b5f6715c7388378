//! Computational toolkit for the stable complex matrix model with interaction
//! (λ/N^{p-1}) Tr (MM†)^p.
//!
//! The crate computes cumulants of the model by three independent routes and
//! cross-validates them:
//!
//! * exact perturbative enumeration of ciliated ribbon diagrams
//!   ([`perturbation`], backed by [`maps`]),
//! * quadrature / Monte-Carlo oracles ([`model`]),
//! * Borel-LeRoy resummation of the divergent series ([`resummation`]).
//!
//! The supporting machinery is exposed as reusable modules: Fuss-Catalan
//! generating functions and truncated power-series arithmetic ([`series`]),
//! analyticity domains ([`domains`]), the BKAR forest formula ([`forests`])
//! and Weingarten calculus for Haar-unitary moments ([`weingarten`]).

pub mod domains;
pub mod forests;
pub mod maps;
pub mod model;
pub mod numerics;
pub mod perturbation;
pub mod resummation;
pub mod series;
pub mod weingarten;

use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("evaluation point too close to a branch cut: {0}")]
    BranchCut(String),
    #[error("malformed combinatorial map: {0}")]
    MalformedMap(String),
    #[error("map is disconnected")]
    Disconnected,
    #[error("enumeration would exceed the configured ceiling ({needed} > {ceiling})")]
    ResourceCeiling { needed: u128, ceiling: u128 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("contour does not safely enclose the spectrum: {0}")]
    Contour(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Parameter bundle every computation consumes.
///
/// `lambda` is the coupling of the order-2p interaction; `n` is the matrix
/// size N. Monte-Carlo paths additionally require the stability condition
/// Re λ > 0 (in the N-rescaled variables the interaction is λ N Tr X^p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub p: usize,
    pub n: usize,
    pub lambda: Complex64,
}

impl ModelParams {
    pub fn new(p: usize, n: usize, lambda: Complex64) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidParameter(format!("p must be >= 2, got {p}")));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        Ok(ModelParams { p, n, lambda })
    }

    /// Checks the stability condition for sampling paths.
    pub fn require_stable(&self) -> Result<()> {
        if self.lambda.re <= 0.0 && self.lambda.norm() > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Re lambda must be > 0 for Monte-Carlo sampling, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}
