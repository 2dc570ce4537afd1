//! Mode-space representation of the solution and the triangular cascade
//! solver.
//!
//! A radial function is a coefficient vector `(g_n)_{n≤N}` on the orthonormal
//! basis `φ_{n,0,0}`. On this basis the Cauchy problem becomes the triangular
//! ODE system
//!
//! ```text
//! g_0(t) = g_1(t) = 0,
//! ∂_t g_n + λ_{n,0} g_n = Σ_{k+l=n, k,l≥1} μ_{k,l} g_k g_l,   n ≥ 2,
//! ```
//!
//! where mode `n` is forced only by strictly lower modes. The system is
//! solved either exactly — each `g_n(t)` is a finite sum of terms
//! `c · t^p · e^{-r t}` built by Duhamel recursion — or numerically with an
//! embedded adaptive Runge-Kutta scheme. The two routes are independent and
//! cross-validate each other.

mod expsum;
mod rk45;

pub use expsum::{ExpSumSolution, ExpTerm};

use crate::spectrum::SpectralTable;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Finite coefficient vector `(g_n)_{0 ≤ n ≤ N}` on the radial eigenbasis.
///
/// The basis is orthonormal, so the L² norm of the represented function is
/// the Euclidean norm of the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVector {
    coeffs: Vec<f64>,
}

impl ModeVector {
    /// The zero vector with truncation `n_max`.
    pub fn zeros(n_max: usize) -> Self {
        Self {
            coeffs: vec![0.0; n_max + 1],
        }
    }

    /// Wrap explicit coefficients; the truncation is `coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a mode vector needs at least mode 0");
        Self { coeffs }
    }

    /// `amplitude · φ_mode` embedded at truncation `n_max`.
    pub fn single_mode(n_max: usize, mode: usize, amplitude: f64) -> Result<Self> {
        if mode > n_max {
            return Err(Error::TruncationMismatch {
                expected: n_max,
                got: mode,
            });
        }
        let mut v = Self::zeros(n_max);
        v.coeffs[mode] = amplitude;
        Ok(v)
    }

    /// Seeded random data `a_n = ±u_n (n+1)^{-decay_exponent}` on modes
    /// `2..=N`, rescaled to the requested L² norm.
    pub fn random_decay(n_max: usize, norm: f64, decay_exponent: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = Self::zeros(n_max);
        for n in 2..=n_max {
            let u: f64 = rng.random();
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            v.coeffs[n] = sign * u * ((n + 1) as f64).powf(-decay_exponent);
        }
        let current = v.l2_norm();
        if current > 0.0 {
            let scale = norm / current;
            for c in &mut v.coeffs {
                *c *= scale;
            }
        }
        v
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs[n]
    }

    pub fn set_coeff(&mut self, n: usize, value: f64) {
        self.coeffs[n] = value;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Admissible data is orthogonal to the collision invariants kept by the
    /// radial problem: `g_0 = g_1 = 0`.
    pub fn is_admissible(&self) -> bool {
        self.coeffs[0] == 0.0 && self.coeffs.get(1).is_none_or(|&c| c == 0.0)
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(n, _)| n)
            .collect()
    }
}

/// Bilinear collision operator on mode space:
///
/// `Γ(f, g)_n = -f_0 g_n λ_{n,0} + Σ_{k+l=n, k,l≥1} μ_{k,l} f_k g_l`,
/// truncated at the table's `N`. Mode `n` receives contributions only from
/// pairs with `k + l = n`, and admissible inputs produce admissible output.
pub fn gamma_apply(table: &SpectralTable, f: &ModeVector, g: &ModeVector) -> Result<ModeVector> {
    let n_max = table.n_max();
    if f.n_max() != n_max {
        return Err(Error::TruncationMismatch {
            expected: n_max,
            got: f.n_max(),
        });
    }
    if g.n_max() != n_max {
        return Err(Error::TruncationMismatch {
            expected: n_max,
            got: g.n_max(),
        });
    }
    let mut out = ModeVector::zeros(n_max);
    let f0 = f.coeff(0);
    for n in 0..=n_max {
        let mut acc = -f0 * g.coeff(n) * table.lambda(n);
        for k in 1..n {
            acc += table.mu(k, n - k) * f.coeff(k) * g.coeff(n - k);
        }
        out.coeffs[n] = acc;
    }
    Ok(out)
}

/// Diagonal action `g_n ↦ λ_{n,0}^power · g_n`, with `0^power := 0`.
///
/// `power = 1` is the linearized operator itself, `power = 1/2` its square
/// root; any real power is accepted since all eigenvalues are nonnegative.
pub fn linearized_apply(table: &SpectralTable, g: &ModeVector, power: f64) -> ModeVector {
    assert_eq!(
        g.n_max(),
        table.n_max(),
        "mode vector and table disagree on truncation"
    );
    let mut out = g.clone();
    for n in 0..=g.n_max() {
        let lam = table.lambda(n);
        out.coeffs[n] *= if lam == 0.0 { 0.0 } else { lam.powf(power) };
    }
    out
}

/// Orthogonal projection onto modes `0..=m`: coefficients above `m` zeroed.
pub fn project(g: &ModeVector, m: usize) -> ModeVector {
    let mut out = g.clone();
    for n in (m + 1)..=g.n_max() {
        out.coeffs[n] = 0.0;
    }
    out
}

/// Solver selection for [`solve_triangular`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Closed-form Duhamel recursion, mode by mode.
    ExpSum,
    /// Embedded adaptive Runge-Kutta on the truncated system.
    AdaptiveNumeric,
}

/// Tuning knobs for the solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Rates closer than this (relatively) are treated as resonant; the
    /// confluent Duhamel primitive raises the polynomial degree instead of
    /// dividing by the vanishing gap.
    pub resonance_tol: f64,
    /// Exponential-sum terms per mode before falling back to the numeric
    /// route; term counts grow combinatorially with the mode index.
    pub term_cap: usize,
    /// Terms below this magnitude are dropped.
    pub prune_eps: f64,
    /// Tolerance of the embedded Runge-Kutta scheme.
    pub rk_tol: f64,
    /// Blowup guard: solving aborts when any `|g_n|` exceeds
    /// `blowup_factor · ‖g₀‖` (data outside the small-norm regime).
    pub blowup_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            resonance_tol: 1e-9,
            term_cap: 100_000,
            prune_eps: 1e-300,
            rk_tol: 1e-10,
            blowup_factor: 1e3,
        }
    }
}

/// Trajectory sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ModeVector>,
}

impl Trajectory {
    pub fn n_max(&self) -> usize {
        self.states[0].n_max()
    }

    /// CSV with header `t,g_0,…,g_N` and 17-significant-digit values, enough
    /// to round-trip every f64 exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for n in 0..=self.n_max() {
            write!(w, ",g_{n}")?;
        }
        writeln!(w)?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for c in state.coeffs() {
                write!(w, ",{c:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Result of [`solve_triangular`].
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub trajectory: Trajectory,
    /// Closed-form representation, when the exp-sum route produced one.
    pub expsum: Option<ExpSumSolution>,
    /// Set when the exp-sum route hit its term cap and the numeric route
    /// finished the job.
    pub used_fallback: bool,
}

/// Solve the cascade from `g0` and sample the solution on `t_grid`.
///
/// Initial data must be admissible (`g_0 = g_1 = 0`) and the grid sorted and
/// nonnegative. The exp-sum route integrates each mode's forcing in closed
/// form; near-resonant rates within `resonance_tol` produce the confluent
/// `t^{p+1} e^{-λ t}` term instead. The numeric route integrates the same
/// truncated system with a Dormand-Prince 4(5) scheme at `rk_tol`.
pub fn solve_triangular(
    table: &SpectralTable,
    g0: &ModeVector,
    t_grid: &[f64],
    method: SolveMethod,
    opts: &SolverOptions,
) -> Result<SolveOutput> {
    if g0.n_max() != table.n_max() {
        return Err(Error::TruncationMismatch {
            expected: table.n_max(),
            got: g0.n_max(),
        });
    }
    if !g0.is_admissible() {
        return Err(Error::InvalidInitialData {
            g0: g0.coeff(0),
            g1: g0.coeff(1),
        });
    }
    if t_grid.is_empty()
        || t_grid[0] < 0.0
        || t_grid.windows(2).any(|w| w[1] < w[0])
        || t_grid.iter().any(|t| !t.is_finite())
    {
        return Err(Error::DomainError {
            what: "solve_triangular".into(),
            detail: "time grid must be nonempty, sorted and nonnegative".into(),
        });
    }

    let guard = opts.blowup_factor * g0.l2_norm().max(1e-30);
    match method {
        SolveMethod::ExpSum => match expsum::build(table, g0, opts) {
            Ok(solution) => {
                let trajectory = sample_expsum(&solution, t_grid, guard)?;
                Ok(SolveOutput {
                    trajectory,
                    expsum: Some(solution),
                    used_fallback: false,
                })
            }
            Err(expsum::BuildError::TermCapExceeded) => {
                let trajectory = rk45::solve(table, g0, t_grid, opts.rk_tol, guard)?;
                Ok(SolveOutput {
                    trajectory,
                    expsum: None,
                    used_fallback: true,
                })
            }
        },
        SolveMethod::AdaptiveNumeric => {
            let trajectory = rk45::solve(table, g0, t_grid, opts.rk_tol, guard)?;
            Ok(SolveOutput {
                trajectory,
                expsum: None,
                used_fallback: false,
            })
        }
    }
}

fn sample_expsum(solution: &ExpSumSolution, t_grid: &[f64], guard: f64) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let state = solution.eval(t);
        for (n, &c) in state.coeffs().iter().enumerate() {
            if !c.is_finite() || c.abs() > guard {
                return Err(Error::NumericBlowup {
                    mode: n,
                    t,
                    value: c,
                    guard,
                });
            }
        }
        states.push(state);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}

/// Evenly spaced grid `0 = t_0 < … < t_{steps-1} = t_max`.
pub fn time_grid(t_max: f64, steps: usize) -> Vec<f64> {
    assert!(steps >= 2 && t_max > 0.0);
    (0..steps)
        .map(|i| t_max * i as f64 / (steps - 1) as f64)
        .collect()
}
