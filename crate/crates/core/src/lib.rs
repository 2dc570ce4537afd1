//! Spectral Galerkin solver for the radially symmetric spatially homogeneous
//! Boltzmann equation with a Debye-Yukawa angular kernel.
//!
//! The linearized collision operator is diagonal on the radial eigenbasis
//! `φ_{n,0,0}` of the harmonic oscillator, and the bilinear collision term is
//! triangular on that basis: the pair of modes `(k, l)` feeds only mode
//! `k + l`. This crate builds the eigenvalue and coupling tables, solves the
//! resulting triangular ODE cascade either in closed form (exponential-sum
//! Duhamel recursion) or numerically, and certifies the decay and smoothing
//! estimates the diagonalization implies.
//!
//! Module layout:
//!
//! * [`quad`] — adaptive Gauss-Kronrod quadrature robust to logarithmic
//!   endpoint singularities,
//! * [`specfun`] — Laguerre, Legendre and Hermite functions plus the radial
//!   eigenfunctions,
//! * [`kernel`] — the Debye-Yukawa angular kernel `β(θ)` and its weighted
//!   trigonometric moments,
//! * [`spectrum`] — eigenvalues `λ_{n,0}`, couplings `μ_{k,l}` and their
//!   cached tables,
//! * [`galerkin`] — mode vectors, the collision operators on mode space and
//!   the cascade solver,
//! * [`analysis`] — spectral weights/norms and the inequality certifications,
//! * [`verify`] — the end-to-end certification suite.

pub mod analysis;
pub mod galerkin;
pub mod kernel;
pub mod quad;
pub mod specfun;
pub mod spectrum;
pub mod verify;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Integration bounds are inverted or degenerate.
    #[error("invalid integration domain: a = {a}, b = {b}")]
    InvalidDomain { a: f64, b: f64 },

    /// An iterative routine stalled above its tolerance budget.
    #[error("{what} did not converge: error estimate {achieved:e} > {requested:e} after {evaluations} evaluations")]
    NonConvergence {
        what: String,
        achieved: f64,
        requested: f64,
        evaluations: usize,
    },

    /// An argument left the mathematical domain of an operation.
    #[error("domain error in {what}: {detail}")]
    DomainError { what: String, detail: String },

    /// `moment(0, l)` diverges at the angular origin.
    #[error("divergent kernel moment requested: k = 0 (integrand ~ θ^{{-1}} log-power at 0)")]
    DivergentMoment,

    /// A spectral-table invariant failed after construction.
    #[error("spectral table invariant violated: {detail}")]
    InvariantViolation { detail: String },

    /// Two mode vectors (or a vector and a table) disagree on truncation.
    #[error("truncation mismatch: expected N = {expected}, got N = {got}")]
    TruncationMismatch { expected: usize, got: usize },

    /// Initial data has a nonzero component on the collision invariants.
    #[error(
        "invalid initial data: coefficients g_0, g_1 must vanish (got g_0 = {g0}, g_1 = {g1})"
    )]
    InvalidInitialData { g0: f64, g1: f64 },

    /// A trajectory coefficient exceeded the configured guard.
    #[error("numeric blowup: |g_{mode}(t = {t})| = {value:e} exceeded guard {guard:e}")]
    NumericBlowup {
        mode: usize,
        t: f64,
        value: f64,
        guard: f64,
    },

    /// A certification check failed; carries the first offending time.
    #[error("certification failure in {check} at t = {worst_t}: margin {worst_margin:e}")]
    CertificationFailure {
        check: String,
        worst_t: f64,
        worst_margin: f64,
    },

    /// A weighted norm left the representable range.
    #[error("overflow in {what}: weighted coefficient for mode {mode} is not finite")]
    Overflow { what: String, mode: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
