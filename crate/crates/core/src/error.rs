//! Error type shared by all modules.

use num_complex::Complex64;

/// Crate-wide error enum.  Variants carry enough payload to diagnose the
/// failure without re-running (witness vectors, condition estimates,
/// iteration counts).
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    /// Grid construction or grid-function usage violated a precondition.
    #[error("grid: {0}")]
    Grid(String),

    /// Ellipticity failed at a node; carries the witness direction.
    #[error("ellipticity violated at node {node}: Re<A eta, eta> = {value:.6e}, |eta| = 1, witness eta = {witness:?}")]
    Ellipticity {
        node: usize,
        value: f64,
        witness: Vec<Complex64>,
    },

    /// Symbol construction failed (branch/residual guard).
    #[error("symbol: {0}")]
    Symbol(String),

    /// Pseudodifferential/weight usage error (untagged square function,
    /// nonzero mean where a homogeneous object is requested, ...).
    #[error("psdo: {0}")]
    Psdo(String),

    /// Strip solver failure other than singularity.
    #[error("solver: {0}")]
    Solver(String),

    /// Direct factorization hit a (near-)singular block.
    #[error("solver: singular or near-singular factorization at reduction level {level} (condition estimate {cond:.3e})")]
    SolverSingular { level: usize, cond: f64 },

    /// Iterative solve did not converge.
    #[error("solver: no convergence after {iters} iterations (relative residual {residual:.3e})")]
    SolverNoConvergence { iters: usize, residual: f64 },

    /// Configuration parse/validation failure; message carries location
    /// info from the parser when available.
    #[error("config: {0}")]
    Config(String),

    /// Verification harness misuse (unknown suite, inconsistent params).
    #[error("verify: {0}")]
    Verify(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
