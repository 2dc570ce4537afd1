//! Special functions for the spectral basis: Laguerre and Legendre
//! polynomials, one-dimensional Hermite functions, and the radial
//! eigenfunctions `φ_{n,0,0}` of the linearized collision operator.
//!
//! All polynomial families are evaluated by their three-term recurrences;
//! the explicit alternating factorial sums cancel catastrophically already
//! for moderate degree and are kept only as small-degree test oracles.
//! Every ratio of Gamma functions goes through [`ln_gamma`] differences so
//! that nothing overflows before the final `exp`.

use crate::{Error, Result};

#[allow(clippy::excessive_precision)]
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// Natural log of the Gamma function for positive arguments.
///
/// Lanczos approximation with g = 7 and 9 coefficients; relative accuracy is
/// a few ulps over the range used here. Arguments `x <= 0` return infinity at
/// the poles and go through the reflection formula otherwise.
#[allow(clippy::excessive_precision)] // published coefficient digits kept verbatim
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];

    if x < 0.5 {
        // Reflection: Γ(x) Γ(1-x) = π / sin(πx).
        let s = (std::f64::consts::PI * x).sin();
        if s == 0.0 {
            return f64::INFINITY;
        }
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    }

    let z = x - 1.0;
    let mut acc = 0.999_999_999_999_809_93;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (z + (i + 1) as f64);
    }
    let t = z + 7.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Generalized Laguerre polynomial `L_n^{(α)}(x)`, α > -1.
///
/// Three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+α-x) L_k - (k+α) L_{k-1}`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut curr = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * curr - (kf + alpha) * prev) / (kf + 1.0);
        prev = curr;
        curr = next;
    }
    curr
}

/// Legendre polynomial `P_l(x)` on `[-1, 1]` by the Bonnet recurrence.
pub fn legendre(l: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::DomainError {
            what: "legendre".into(),
            detail: format!("x = {x} outside [-1, 1]"),
        });
    }
    Ok(legendre_unchecked(l, x))
}

/// `P_l(x)` without the domain check; callers guarantee `|x| <= 1`.
pub(crate) fn legendre_unchecked(l: usize, x: f64) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut curr = x;
    for k in 1..l {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * curr - kf * prev) / (kf + 1.0);
        prev = curr;
        curr = next;
    }
    curr
}

/// L²(ℝ)-normalized Hermite function `H_n(x)` with Gaussian `e^{-x²/4}`.
///
/// `H_0 = (2π)^{-1/4} e^{-x²/4}` and the creation-operator ladder gives
/// `H_{n+1} = (x H_n - √n H_{n-1}) / √(n+1)`.
pub fn hermite_fn(n: usize, x: f64) -> f64 {
    let h0 = (2.0 * std::f64::consts::PI).powf(-0.25) * (-x * x / 4.0).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut curr = x * h0;
    for k in 1..n {
        let kf = k as f64;
        let next = (x * curr - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = curr;
        curr = next;
    }
    curr
}

/// Radial eigenfunction `φ_{n,0,0}` evaluated at radius `r = |v|`.
///
/// `φ_{n,0,0}(v) = (n! / (√2 Γ(n+3/2)))^{1/2} e^{-|v|²/4} L_n^{(1/2)}(|v|²/2)
/// · (4π)^{-1/2}`; the last factor is the constant spherical harmonic. These
/// form an orthonormal basis of radial L²(ℝ³) and satisfy
/// `(-Δ + |v|²/4) φ_{n,0,0} = (2n + 3/2) φ_{n,0,0}`.
pub fn radial_eigenfunction(n: usize, r: f64) -> f64 {
    let log_norm =
        0.5 * (ln_gamma(n as f64 + 1.0) - 0.5 * std::f64::consts::LN_2 - ln_gamma(n as f64 + 1.5));
    let y00 = 0.5 / std::f64::consts::PI.sqrt();
    log_norm.exp() * (-r * r / 4.0).exp() * laguerre(n, 0.5, r * r / 2.0) * y00
}

/// A radial basis mode, bundling the index with its evaluation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadialEigenfunction {
    pub n: usize,
}

impl RadialEigenfunction {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// Value at radius `r`; the mode depends on `v ∈ ℝ³` only through `|v|`.
    pub fn eval(&self, r: f64) -> f64 {
        radial_eigenfunction(self.n, r)
    }

    /// Harmonic-oscillator eigenvalue `2n + 3/2` of this mode.
    pub fn oscillator_eigenvalue(&self) -> f64 {
        2.0 * self.n as f64 + 1.5
    }
}
