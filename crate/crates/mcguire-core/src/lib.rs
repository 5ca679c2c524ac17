//! Time-dependent Green's function of a spin-down impurity in a
//! one-dimensional gas of free spin-up fermions with a repulsive
//! δ-interaction of strength `c` (the Gaudin–Yang model restricted to a
//! single flipped spin, i.e. the McGuire problem).
//!
//! The central object is
//!
//! ```text
//! G↓(x,t) = ⟨FS| ψ↓(x,t) ψ↓†(0,0) |FS⟩ ,
//! ```
//!
//! the amplitude for injecting the impurity into the Fermi sea at the
//! origin and retrieving it at `(x, t)`. In the thermodynamic limit
//! (density k_F/π, units ħ = 2m = 1 so that energy = k²) it is an
//! integral over the impurity rapidity λ of Fredholm determinants of
//! integrable kernels supported on `[-k_F, k_F]`:
//!
//! ```text
//! G↓(x,t) = (2/πc) ∫ dλ { det(1 + 𝒱 - ℛ) + (g(x,t;λ) - 1) det(1 + 𝒱) } .
//! ```
//!
//! The crate provides two independent computational routes:
//!
//! * the production route: closed-form oscillatory primitives built on an
//!   in-repo Faddeeva function ([`faddeeva`], [`oscquad`]), the kernel
//!   functions g and e(q|λ) ([`kernels`]), Nyström discretization with
//!   complex LU determinants ([`fredholm`], [`linalg`], [`quad`]), and the
//!   adaptive λ-integration in a compactified θ-coordinate ([`greens`]);
//! * an exact finite-size oracle: Bethe-ansatz roots at finite (N, L)
//!   ([`bethe`]), wave functions, normalization constants, form factors
//!   and brute-force spectral sums ([`finite`]) against which every stage
//!   of the production route is validated.
//!
//! The two routes share no numerical machinery beyond scalar arithmetic,
//! which is what makes the cross-checks in `tests/` meaningful.

pub mod bethe;
pub mod faddeeva;
pub mod finite;
pub mod fredholm;
pub mod greens;
pub mod kernels;
pub mod linalg;
pub mod oscquad;
pub mod params;
pub mod quad;

pub use greens::{
    equal_time, equal_time_diagnostic, greens, greens_infinite_c, greens_infinite_c_with,
    greens_with, EqualTime, EqualTimeDiagnostic, GreensAccuracy, GreensValue,
};
pub use params::{CoreError, FiniteGeometry, PhysicsParams};

/// Complex double-precision scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
