//! Numerical calculus for Poisson operators and Dirichlet-Neumann maps of
//! divergence-form elliptic operators `-div(A grad u)` on the upper half
//! space, with complex, Lipschitz, t-independent coefficients.
//!
//! The horizontal variable lives on a periodic torus (d = 1 or 2); the
//! vertical variable on a finite strip [0, T].  The crate provides:
//!
//! * explicit first-order symbols mu, lambda, q of the operator (roots of
//!   the characteristic quadratics, principal branch) and their calculus
//!   ([`symbol`]),
//! * the symbol-quantized Poisson semigroup U_0(t) and weighted variants
//!   G_p(t) with kernel slices and square functions ([`psdo`]),
//! * a direct elliptic strip solver acting as the oracle: Dirichlet and
//!   inhomogeneous solves, trace operators P, Lambda, Q, the horizontal
//!   operator A', remainder S_1, and dense operator matrices ([`solver`]),
//! * estimate/identity checks over seeded coefficient/data ensembles with
//!   machine-readable reports ([`verify`]).
//!
//! Everything is double precision and deterministic for a fixed seed.

pub mod coeff;
pub mod ensemble;
pub mod error;
pub mod expm;
pub mod grid;
pub mod psdo;
pub mod report;
pub mod solver;
pub mod symbol;
pub mod verify;

pub use error::{CoreError, Result};
