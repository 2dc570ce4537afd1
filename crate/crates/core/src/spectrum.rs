//! Eigenvalues `λ_{n,0}` of the linearized collision operator on the radial
//! basis, the bilinear coupling coefficients `μ_{k,l}`, their cached tables,
//! and the quantitative diagnostics built on them.
//!
//! On the radial eigenbasis the linearized operator acts diagonally with
//!
//! ```text
//! λ_{n,0} = ∫₀^{π/4} β(θ) (1 - cos^{2n}θ - sin^{2n}θ) dθ,   λ_{0,0} = λ_{1,0} = 0,
//! ```
//!
//! and the bilinear operator sends the mode pair `(k, l)` to mode `k + l`
//! with weight
//!
//! ```text
//! μ_{k,l} = √((2k+2l+1)! / ((2k+1)!(2l+1)!)) ∫₀^{π/4} β(θ) sin^{2k}θ cos^{2l}θ dθ.
//! ```
//!
//! The eigenvalues are superadditive (`λ_k + λ_l > λ_{k+l}` for `k, l ≥ 2`)
//! and grow like `(log(2n + 5/2))^{2/s}`; both facts are certified
//! numerically by the table invariants and the diagnostics below.

use crate::kernel::{CollisionKernel, MomentRoute};
use crate::quad::{integrate_with, QuadOptions};
use crate::specfun::{legendre_unchecked, ln_gamma};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// `(log(2n + 5/2))^{2/s}`, the spectral scale of the operator: eigenvalues
/// grow at this rate and all smoothing weights are powers of it.
pub fn log_harmonic_scale(s: f64, n: usize) -> f64 {
    (2.0 * n as f64 + 2.5).ln().powf(2.0 / s)
}

/// Eigenvalue `λ_{n,0}`.
///
/// `n ∈ {0, 1}` returns exactly 0 (the cancellation is analytic; quadrature
/// would only return tolerance noise). For `n ≥ 2` the integrand vanishes
/// like `n θ (log 1/θ)^{2/s-1}` at the origin and is handled by the
/// singular-endpoint substitution.
pub fn lambda_radial(kernel: &CollisionKernel, n: usize, tol: f64) -> Result<f64> {
    if n <= 1 {
        return Ok(0.0);
    }
    let two_n = 2.0 * n as f64;
    let f = |theta: f64| {
        let bracket = -(two_n * theta.cos().ln()).exp_m1() - (two_n * theta.sin().ln()).exp();
        kernel.log_beta(theta).exp() * bracket
    };
    let opts = QuadOptions {
        singular_at_a: true,
        ..QuadOptions::relative(tol)
    };
    Ok(integrate_with(f, 0.0, kernel.theta_max, &opts)?.value)
}

/// Eigenvalue `λ_{n,l}` of the full (non-radial) diagonalization,
///
/// ```text
/// λ_{n,l} = ∫₀^{π/4} β(θ) (1 + δ_{n,0}δ_{l,0}
///             - sin^{2n+l}θ P_l(sin θ) - cos^{2n+l}θ P_l(cos θ)) dθ.
/// ```
///
/// Consistency: `lambda_general(n, 0)` agrees with [`lambda_radial`], and
/// the null modes `(0,0)`, `(0,1)`, `(1,0)` — mass, momentum, energy — give
/// zero. The quadrature keeps a small absolute floor (`tol · 10⁻⁴`) so the
/// identically-cancelling null-mode integrands terminate.
pub fn lambda_general(kernel: &CollisionKernel, n: usize, l: usize, tol: f64) -> Result<f64> {
    let m = (2 * n + l) as f64;
    let delta = if n == 0 && l == 0 { 1.0 } else { 0.0 };
    let f = |theta: f64| {
        let (sin, cos) = theta.sin_cos();
        let p_cos = legendre_unchecked(l, cos);
        let p_sin = legendre_unchecked(l, sin);
        // 1 - cos^m P_l(cos) split to avoid cancellation near θ = 0.
        let bracket =
            -(m * cos.ln()).exp_m1() * p_cos + (1.0 - p_cos) + delta - (m * sin.ln()).exp() * p_sin;
        kernel.log_beta(theta).exp() * bracket
    };
    let opts = QuadOptions {
        singular_at_a: true,
        epsabs: tol * 1e-4,
        ..QuadOptions::relative(tol)
    };
    Ok(integrate_with(f, 0.0, kernel.theta_max, &opts)?.value)
}

/// Combinatorial prefactor of `μ_{k,l}`, through log-gamma differences.
/// Evaluated on the sorted pair so the factorial symmetry is exact in
/// floating point, not just up to rounding.
pub fn mu_prefactor(k: u32, l: u32) -> f64 {
    let (lo, hi) = (f64::from(k.min(l)), f64::from(k.max(l)));
    (0.5 * (ln_gamma(2.0 * lo + 2.0 * hi + 2.0)
        - ln_gamma(2.0 * lo + 2.0)
        - ln_gamma(2.0 * hi + 2.0)))
    .exp()
}

/// Coupling coefficient `μ_{k,l}` for `k, l ≥ 1`.
pub fn mu(kernel: &CollisionKernel, k: u32, l: u32, tol: f64) -> Result<f64> {
    if k == 0 || l == 0 {
        return Err(Error::DomainError {
            what: "mu".into(),
            detail: format!("indices must be ≥ 1, got ({k}, {l})"),
        });
    }
    Ok(mu_prefactor(k, l) * kernel.moment(k, l, MomentRoute::Theta, tol)?)
}

/// Cached arrays `λ_{n,0}` (n ≤ N) and `μ_{k,l}` (k, l ≥ 1, k + l ≤ N).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    s: f64,
    n_max: usize,
    tol: f64,
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

/// On-disk layout of the cache file.
#[derive(Serialize, Deserialize)]
struct CacheDoc {
    s: f64,
    #[serde(rename = "N")]
    n: usize,
    tol: f64,
    lambda: Vec<f64>,
    mu: Vec<(u32, u32, f64)>,
    kernel: String,
}

const KERNEL_TAG: &str = "debye-yukawa-representative";

impl SpectralTable {
    /// Build the table by quadrature; independent entries run in parallel.
    pub fn build(kernel: &CollisionKernel, n_max: usize, tol: f64) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::DomainError {
                what: "SpectralTable::build".into(),
                detail: format!("N = {n_max} < 2"),
            });
        }
        let lambda = (0..=n_max)
            .into_par_iter()
            .map(|n| lambda_radial(kernel, n, tol))
            .collect::<Result<Vec<_>>>()?;
        let pairs = mu_pairs(n_max);
        let mu = pairs
            .par_iter()
            .map(|&(k, l)| mu(kernel, k, l, tol))
            .collect::<Result<Vec<_>>>()?;
        let table = Self {
            s: kernel.s,
            n_max,
            tol,
            lambda,
            mu,
        };
        table.check_invariants()?;
        Ok(table)
    }

    /// Restore from `dir` if a cache keyed by `(s, N, tol)` exists, else
    /// build and persist. The boolean reports whether the cache was used.
    pub fn load_or_build(
        dir: &Path,
        kernel: &CollisionKernel,
        n_max: usize,
        tol: f64,
    ) -> Result<(Self, bool)> {
        if let Some(table) = Self::load(dir, kernel.s, n_max, tol)? {
            return Ok((table, true));
        }
        let table = Self::build(kernel, n_max, tol)?;
        table.save(dir)?;
        Ok((table, false))
    }

    /// Read the cache file for `(s, N, tol)`; `None` when absent.
    pub fn load(dir: &Path, s: f64, n_max: usize, tol: f64) -> Result<Option<Self>> {
        let path = dir.join(cache_file_name(s, n_max, tol));
        if !path.exists() {
            return Ok(None);
        }
        let doc: CacheDoc =
            serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(&path)?))?;
        if doc.s != s || doc.n != n_max || doc.tol != tol || doc.kernel != KERNEL_TAG {
            return Ok(None);
        }
        let mut mu = vec![0.0; mu_len(n_max)];
        for (k, l, value) in doc.mu {
            mu[mu_index(n_max, k as usize, l as usize)] = value;
        }
        let table = Self {
            s,
            n_max,
            tol,
            lambda: doc.lambda,
            mu,
        };
        table.check_invariants()?;
        Ok(Some(table))
    }

    /// Persist to `dir` under the `(s, N, tol)` cache key.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(cache_file_name(self.s, self.n_max, self.tol));
        let doc = CacheDoc {
            s: self.s,
            n: self.n_max,
            tol: self.tol,
            lambda: self.lambda.clone(),
            mu: mu_pairs(self.n_max)
                .iter()
                .map(|&(k, l)| (k, l, self.mu(k as usize, l as usize)))
                .collect(),
            kernel: KERNEL_TAG.into(),
        };
        let file = std::fs::File::create(&path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &doc)?;
        Ok(path)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `λ_{n,0}`; panics when `n > N`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// `μ_{k,l}`; panics outside `k, l ≥ 1, k + l ≤ N`.
    pub fn mu(&self, k: usize, l: usize) -> f64 {
        assert!(
            k >= 1 && l >= 1 && k + l <= self.n_max,
            "mu({k},{l}) outside table"
        );
        self.mu[mu_index(self.n_max, k, l)]
    }

    /// Restriction of the table to truncation `m ≤ N`; entries are copied
    /// bit-for-bit, so solving at `m` matches solving at `N` then projecting.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m < 2 || m > self.n_max {
            return Err(Error::TruncationMismatch {
                expected: self.n_max,
                got: m,
            });
        }
        let mut mu = Vec::with_capacity(mu_len(m));
        for (k, l) in mu_pairs(m) {
            mu.push(self.mu(k as usize, l as usize));
        }
        Ok(Self {
            s: self.s,
            n_max: m,
            tol: self.tol,
            lambda: self.lambda[..=m].to_vec(),
            mu,
        })
    }

    /// `λ_{n,0} / (log(2n + 5/2))^{2/s}`; bounded above and below uniformly
    /// in `n`, which is what the asymptotic eigenvalue estimate asserts.
    pub fn asymptote_ratio(&self, n: usize) -> f64 {
        assert!((2..=self.n_max).contains(&n));
        self.lambda[n] / log_harmonic_scale(self.s, n)
    }

    /// `Σ_{k+l=n, k,l≥1} μ_{k,l}² / (log(2l+5/2))^{2/s}` divided by
    /// `(log(2n+5/2))^{2/s}`; the convolution-sum estimate asserts this stays
    /// bounded in `n`.
    pub fn convolution_sum_ratio(&self, n: usize) -> f64 {
        assert!((2..=self.n_max).contains(&n));
        let mut sum = 0.0;
        for l in 1..n {
            let k = n - l;
            let m = self.mu(k, l);
            sum += m * m / log_harmonic_scale(self.s, l);
        }
        sum / log_harmonic_scale(self.s, n)
    }

    /// Minimum of `λ_k + λ_l - λ_{k+l}` over `2 ≤ k, l`, `k + l ≤ N`,
    /// with the attaining pair.
    pub fn super_additivity_margin(&self) -> (f64, (usize, usize)) {
        let mut best = f64::INFINITY;
        let mut arg = (0, 0);
        for k in 2..=self.n_max {
            for l in k..=self.n_max {
                if k + l > self.n_max {
                    break;
                }
                let margin = self.lambda[k] + self.lambda[l] - self.lambda[k + l];
                if margin < best {
                    best = margin;
                    arg = (k, l);
                }
            }
        }
        (best, arg)
    }

    // Negated comparisons double as NaN detectors on table entries.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check_invariants(&self) -> Result<()> {
        if self.lambda[0] != 0.0 || self.lambda[1] != 0.0 {
            return Err(Error::InvariantViolation {
                detail: "λ_0 or λ_1 nonzero".into(),
            });
        }
        for n in 2..=self.n_max {
            if !(self.lambda[n] > 0.0) {
                return Err(Error::InvariantViolation {
                    detail: format!("λ_{n} = {} not positive", self.lambda[n]),
                });
            }
            if n > 2 && !(self.lambda[n] > self.lambda[n - 1]) {
                return Err(Error::InvariantViolation {
                    detail: format!(
                        "λ not strictly increasing at n = {n}: {} vs {}",
                        self.lambda[n],
                        self.lambda[n - 1]
                    ),
                });
            }
        }
        for (k, l) in mu_pairs(self.n_max) {
            let value = self.mu(k as usize, l as usize);
            if !(value > 0.0) {
                return Err(Error::InvariantViolation {
                    detail: format!("μ_({k},{l}) = {value} not positive"),
                });
            }
        }
        let (margin, (k, l)) = self.super_additivity_margin();
        if self.n_max >= 4 && !(margin > 0.0) {
            return Err(Error::InvariantViolation {
                detail: format!("super-additivity fails at (k, l) = ({k}, {l}): margin {margin}"),
            });
        }
        Ok(())
    }
}

/// Ordered pairs `(k, l)` with `k, l ≥ 1`, `k + l ≤ n_max`, row-major.
fn mu_pairs(n_max: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::with_capacity(mu_len(n_max));
    for k in 1..n_max {
        for l in 1..=(n_max - k) {
            pairs.push((k as u32, l as u32));
        }
    }
    pairs
}

fn mu_len(n_max: usize) -> usize {
    n_max * (n_max - 1) / 2
}

fn mu_index(n_max: usize, k: usize, l: usize) -> usize {
    (k - 1) * n_max - k * (k - 1) / 2 + (l - 1)
}

fn cache_file_name(s: f64, n_max: usize, tol: f64) -> String {
    format!("spectral_s{s:e}_N{n_max}_tol{tol:e}.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_with, QuadOptions, DEFAULT_TOL};

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn lambda2_exact() -> f64 {
        2.0 / 3.0 - 2.0_f64.sqrt() / 6.0
    }

    #[test]
    fn lambda_vanishes_on_collision_invariants() {
        let kernel = CollisionKernel::new(1.0).unwrap();
        assert_eq!(lambda_radial(&kernel, 0, DEFAULT_TOL).unwrap(), 0.0);
        assert_eq!(lambda_radial(&kernel, 1, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn lambda_2_closed_form_for_s2() {
        // 1 - sin⁴ - cos⁴ = 2 sin²cos², so β(1 - sin⁴ - cos⁴) = 2 sinθ cos²θ.
        let kernel = CollisionKernel::new(2.0).unwrap();
        let l2 = lambda_radial(&kernel, 2, DEFAULT_TOL).unwrap();
        assert!(rel_err(l2, lambda2_exact()) < 1e-11, "λ₂ = {l2}");
    }

    #[test]
    fn lambda_general_reduces_to_radial() {
        let kernel = CollisionKernel::new(1.0).unwrap();
        assert_eq!(lambda_general(&kernel, 0, 0, DEFAULT_TOL).unwrap(), 0.0);
        let g3 = lambda_general(&kernel, 3, 0, DEFAULT_TOL).unwrap();
        let r3 = lambda_radial(&kernel, 3, DEFAULT_TOL).unwrap();
        assert!((g3 - r3).abs() <= 10.0 * DEFAULT_TOL * (1.0 + r3.abs()));
    }

    #[test]
    fn lambda_general_null_and_positive_modes() {
        // (0,1) and (1,0) are the momentum and energy modes: the integrand
        // collapses to 1 - sin² - cos² ≡ 0, so the eigenvalues vanish.
        let kernel = CollisionKernel::new(1.0).unwrap();
        assert!(lambda_general(&kernel, 0, 1, DEFAULT_TOL).unwrap().abs() <= 1e-12);
        assert!(lambda_general(&kernel, 1, 0, DEFAULT_TOL).unwrap().abs() <= 1e-12);
        // Outside the null space the eigenvalues are positive.
        assert!(lambda_general(&kernel, 0, 2, DEFAULT_TOL).unwrap() > 0.0);
        assert!(lambda_general(&kernel, 1, 1, DEFAULT_TOL).unwrap() > 0.0);
    }

    #[test]
    fn mu_11_closed_form_for_s2() {
        let kernel = CollisionKernel::new(2.0).unwrap();
        let expected = (10.0_f64 / 3.0).sqrt() * (1.0 - 2.0_f64.powf(-1.5)) / 3.0;
        let m = mu(&kernel, 1, 1, DEFAULT_TOL).unwrap();
        assert!(rel_err(m, expected) < 1e-11, "μ₁₁ = {m}");
    }

    #[test]
    fn mu_prefactor_is_symmetric() {
        assert_eq!(mu_prefactor(2, 7), mu_prefactor(7, 2));
        // √(5!/(3!·3!)) = √(10/3).
        assert!(rel_err(mu_prefactor(1, 1), (10.0_f64 / 3.0).sqrt()) < 1e-13);
    }

    #[test]
    fn mu_dual_route_for_s1() {
        let kernel = CollisionKernel::new(1.0).unwrap();
        let pre = mu_prefactor(4, 4);
        let theta = pre * kernel.moment(4, 4, MomentRoute::Theta, 1e-11).unwrap();
        let subst = pre
            * kernel
                .moment(4, 4, MomentRoute::Substituted, 1e-11)
                .unwrap();
        assert!(rel_err(theta, subst) < 1e-9);
    }

    #[test]
    fn remark_consistency_with_split_integrals() {
        // The two one-sided actions on the lowest mode recombine into -λ_n:
        // λ_n = ∫β(1 - cos^{2n}) - ∫β sin^{2n}, each piece integrable alone.
        let kernel = CollisionKernel::new(1.0).unwrap();
        let opts = QuadOptions {
            singular_at_a: true,
            ..QuadOptions::relative(DEFAULT_TOL)
        };
        for n in 2..=16usize {
            let two_n = 2.0 * n as f64;
            let cos_part = integrate_with(
                |theta: f64| kernel.log_beta(theta).exp() * (-(two_n * theta.cos().ln()).exp_m1()),
                0.0,
                kernel.theta_max,
                &opts,
            )
            .unwrap()
            .value;
            let sin_part = kernel
                .moment(n as u32, 0, MomentRoute::Theta, DEFAULT_TOL)
                .unwrap();
            let recombined = cos_part - sin_part;
            let direct = lambda_radial(&kernel, n, DEFAULT_TOL).unwrap();
            assert!(
                (recombined - direct).abs() <= 10.0 * DEFAULT_TOL * (1.0 + direct.abs()),
                "n = {n}: {recombined} vs {direct}"
            );
        }
    }

    #[test]
    fn superadditivity_integrand_is_positive() {
        // 1 + c^{2k+2l} + s^{2k+2l} - c^{2k} - s^{2k} - c^{2l} - s^{2l} > 0.
        for i in 1..=100 {
            let theta = std::f64::consts::FRAC_PI_4 * i as f64 / 100.0;
            let (s, c) = theta.sin_cos();
            for k in 2..=10i32 {
                for l in 2..=10i32 {
                    let v = 1.0 + c.powi(2 * (k + l)) + s.powi(2 * (k + l))
                        - c.powi(2 * k)
                        - s.powi(2 * k)
                        - c.powi(2 * l)
                        - s.powi(2 * l);
                    assert!(v > 0.0, "θ = {theta}, k = {k}, l = {l}: {v}");
                }
            }
        }
    }

    #[test]
    fn table_shape_at_minimum_truncation() {
        let kernel = CollisionKernel::new(2.0).unwrap();
        let table = SpectralTable::build(&kernel, 2, DEFAULT_TOL).unwrap();
        assert_eq!(table.lambdas().len(), 3);
        assert_eq!(table.lambda(0), 0.0);
        assert_eq!(table.lambda(1), 0.0);
        assert!(rel_err(table.lambda(2), lambda2_exact()) < 1e-10);
        // Only pair with k, l ≥ 1 and k + l ≤ 2 is (1, 1).
        assert!(table.mu(1, 1) > 0.0);
    }

    #[test]
    fn table_cache_round_trips_bit_identically() {
        let dir = std::env::temp_dir().join(format!("spectral-cache-test-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let kernel = CollisionKernel::new(1.0).unwrap();
        let (built, from_cache) =
            SpectralTable::load_or_build(&dir, &kernel, 8, DEFAULT_TOL).unwrap();
        assert!(!from_cache);
        let (reloaded, from_cache) =
            SpectralTable::load_or_build(&dir, &kernel, 8, DEFAULT_TOL).unwrap();
        assert!(from_cache);
        assert_eq!(built, reloaded);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn superadditivity_margin_positive_at_n64() {
        let kernel = CollisionKernel::new(1.0).unwrap();
        let table = SpectralTable::build(&kernel, 64, DEFAULT_TOL).unwrap();
        let (margin, pair) = table.super_additivity_margin();
        assert!(margin > 0.0, "margin {margin} at {pair:?}");
    }

    #[test]
    fn asymptote_ratio_spot_value() {
        let kernel = CollisionKernel::new(2.0).unwrap();
        let table = SpectralTable::build(&kernel, 4, DEFAULT_TOL).unwrap();
        let expected = lambda2_exact() / 6.5_f64.ln();
        assert!(rel_err(table.asymptote_ratio(2), expected) < 1e-10);
    }

    #[test]
    fn convolution_sum_ratio_matches_hand_assembly() {
        let kernel = CollisionKernel::new(2.0).unwrap();
        let table = SpectralTable::build(&kernel, 6, DEFAULT_TOL).unwrap();

        // n = 2: the single term (1, 1).
        let single = table.mu(1, 1).powi(2) / log_harmonic_scale(2.0, 1);
        let expected = single / log_harmonic_scale(2.0, 2);
        assert!(rel_err(table.convolution_sum_ratio(2), expected) < 1e-13);

        // n = 4: terms (1,3), (2,2), (3,1).
        let sum = table.mu(1, 3).powi(2) / log_harmonic_scale(2.0, 3)
            + table.mu(2, 2).powi(2) / log_harmonic_scale(2.0, 2)
            + table.mu(3, 1).powi(2) / log_harmonic_scale(2.0, 1);
        let expected = sum / log_harmonic_scale(2.0, 4);
        assert!(rel_err(table.convolution_sum_ratio(4), expected) < 1e-13);
    }

    #[test]
    fn truncated_table_is_bitwise_consistent() {
        let kernel = CollisionKernel::new(1.0).unwrap();
        let table = SpectralTable::build(&kernel, 12, DEFAULT_TOL).unwrap();
        let small = table.truncated(6).unwrap();
        assert_eq!(small.n_max(), 6);
        for n in 0..=6 {
            assert_eq!(small.lambda(n), table.lambda(n));
        }
        assert_eq!(small.mu(2, 4), table.mu(2, 4));
        assert!(table.truncated(1).is_err());
        assert!(table.truncated(13).is_err());
    }
}
