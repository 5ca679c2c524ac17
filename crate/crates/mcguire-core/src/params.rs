//! Physical parameters and the crate-wide error type.
//!
//! Units are fixed by the Hamiltonian convention ħ = 2m = 1: a particle
//! with momentum k carries energy k², lengths are inverse momenta and
//! times inverse energies. The coupling `c > 0` is the strength of the
//! repulsive δ-interaction between the impurity and the majority
//! fermions; the Fermi momentum `k_F` sets the majority density k_F/π.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Finite-size geometry for the Bethe-ansatz oracle: `N` majority
/// fermions on a ring of circumference `box_len`, so that the matched
/// Fermi momentum is π·N/box_len.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteGeometry {
    /// Ring circumference L.
    pub box_len: f64,
    /// Number of majority (spin-up) fermions N.
    pub n_up: usize,
}

impl FiniteGeometry {
    /// Geometry with Fermi momentum matched to `k_f`: L = πN/k_f.
    pub fn matched(n_up: usize, k_f: f64) -> Self {
        FiniteGeometry {
            box_len: std::f64::consts::PI * n_up as f64 / k_f,
            n_up,
        }
    }

    /// Lattice constant a = 4/(Lc) entering the Bethe equations.
    pub fn lattice_a(&self, c: f64) -> f64 {
        4.0 / (self.box_len * c)
    }
}

/// Coupling and density of the impurity problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    /// δ-interaction strength c > 0.
    pub c: f64,
    /// Fermi momentum of the majority sea.
    pub k_f: f64,
    /// Present only when a finite-size oracle geometry is attached.
    pub finite: Option<FiniteGeometry>,
}

impl PhysicsParams {
    /// Desk-scale defaults: c = 2, k_F = 1, thermodynamic limit.
    pub fn new(c: f64, k_f: f64) -> Result<Self, CoreError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(CoreError::InvalidParams(format!(
                "coupling c must be positive and finite, got {c}"
            )));
        }
        if !(k_f > 0.0) || !k_f.is_finite() {
            return Err(CoreError::InvalidParams(format!(
                "Fermi momentum k_f must be positive and finite, got {k_f}"
            )));
        }
        Ok(PhysicsParams { c, k_f, finite: None })
    }

    /// Attach a finite ring with `n_up` majority fermions at matched k_F.
    pub fn with_finite(mut self, n_up: usize) -> Self {
        self.finite = Some(FiniteGeometry::matched(n_up, self.k_f));
        self
    }
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams { c: 2.0, k_f: 1.0, finite: None }
    }
}

/// Errors surfaced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Parameter validation failed.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An iterative scheme hit its cap without meeting tolerance. The
    /// history of successive values is attached for diagnosis.
    #[error("{context}: no convergence after {} refinements (history {history:?})", history.len())]
    NonConvergence {
        context: String,
        history: Vec<f64>,
    },

    /// Brute-force state enumeration would exceed the configured budget.
    #[error("state enumeration budget exceeded: {requested} states > budget {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    /// A kernel sample came out non-finite; names the offending nodes.
    #[error("non-finite kernel sample at nodes ({q1}, {q2})")]
    NonFiniteKernel { q1: f64, q2: f64 },

    /// A momentum in a free set collided with an interacting momentum,
    /// hitting a pole of a form-factor determinant.
    #[error("pole collision: free momentum {q} coincides with interacting momentum {k}")]
    PoleCollision { q: f64, k: f64 },

    /// Equal-time Green's function requested exactly at the origin,
    /// where G↓(x,0) = δ(x) has no numerical value.
    #[error("G(0,0) is a delta distribution at the origin, not a number")]
    DeltaAtOrigin,

    /// A quantity was requested outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
}
