//! Closed-form solution of the cascade by Duhamel recursion.
//!
//! Every mode is a finite sum of `c · t^p · e^{-r t}` terms. Products of two
//! such sums are again such sums, so the forcing of mode `n` — a convolution
//! of strictly lower modes — stays in the family, and the variation-of-
//! constants integral
//!
//! ```text
//! ∫₀^t e^{-λ (t-τ)} τ^p e^{-r τ} dτ
//! ```
//!
//! has an elementary primitive. When the forcing rate `r` collides with the
//! mode's own decay rate `λ` the primitive degenerates to the confluent
//! `t^{p+1} e^{-λ t} / (p+1)` branch; eigenvalue super-additivity rules out
//! exact resonance but near-degeneracy is numerically possible, so rates
//! within `resonance_tol` are treated as equal. Terms with matching
//! `(t-power, rate)` are merged to keep the combinatorial growth in check.

use super::{ModeVector, SolverOptions};
use crate::spectrum::SpectralTable;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// One `coeff · t^tpow · e^{-rate·t}` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coeff: f64,
    pub tpow: u32,
    pub rate: f64,
}

/// Exact per-mode solution as exponential-polynomial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSumSolution {
    modes: Vec<Vec<ExpTerm>>,
}

impl ExpSumSolution {
    pub fn n_max(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn terms(&self, n: usize) -> &[ExpTerm] {
        &self.modes[n]
    }

    pub fn term_count(&self) -> usize {
        self.modes.iter().map(Vec::len).sum()
    }

    /// `g_n(t)`.
    pub fn eval_mode(&self, n: usize, t: f64) -> f64 {
        self.modes[n]
            .iter()
            .map(|term| term.coeff * t.powi(term.tpow as i32) * (-term.rate * t).exp())
            .sum()
    }

    /// The full coefficient vector at time `t`.
    pub fn eval(&self, t: f64) -> ModeVector {
        ModeVector::from_coeffs((0..=self.n_max()).map(|n| self.eval_mode(n, t)).collect())
    }
}

pub(super) enum BuildError {
    TermCapExceeded,
}

/// Accumulator merging terms with equal `tpow` and near-equal rate.
///
/// Rates are bucketed on an absolute grid of width `resonance_tol`; the first
/// term to claim a bucket fixes the representative rate. Accumulation runs on
/// a hash map for speed; draining sorts by key so iteration order — and with
/// it every downstream byte of output — stays deterministic.
struct TermBag {
    grid: f64,
    terms: HashMap<(u32, i64), (f64, f64)>,
}

impl TermBag {
    fn new(grid: f64) -> Self {
        Self {
            grid,
            terms: HashMap::new(),
        }
    }

    fn add(&mut self, coeff: f64, tpow: u32, rate: f64) {
        let bucket = (rate / self.grid).round() as i64;
        let entry = self.terms.entry((tpow, bucket)).or_insert((rate, 0.0));
        entry.1 += coeff;
    }

    fn len(&self) -> usize {
        self.terms.len()
    }

    fn drain_sorted(self) -> Vec<((u32, i64), (f64, f64))> {
        let mut entries: Vec<_> = self.terms.into_iter().collect();
        entries.sort_unstable_by_key(|(key, _)| *key);
        entries
    }

    fn into_terms(self, prune_eps: f64) -> Vec<ExpTerm> {
        self.drain_sorted()
            .into_iter()
            .filter(|(_, (_, coeff))| coeff.abs() > prune_eps)
            .map(|((tpow, _), (rate, coeff))| ExpTerm { coeff, tpow, rate })
            .collect()
    }
}

/// Run the Duhamel recursion for every mode up to the table's truncation.
pub(super) fn build(
    table: &SpectralTable,
    g0: &ModeVector,
    opts: &SolverOptions,
) -> Result<ExpSumSolution, BuildError> {
    let n_max = table.n_max();
    let mut modes: Vec<Vec<ExpTerm>> = vec![Vec::new(), Vec::new()];

    for n in 2..=n_max {
        let lambda_n = table.lambda(n);

        // Forcing Σ_{k+l=n} μ_{k,l} g_k g_l as an exponential-polynomial sum;
        // the (k, l) and (l, k) contributions share the same product of terms.
        let mut source = TermBag::new(opts.resonance_tol);
        for k in 1..n {
            let l = n - k;
            if k > l {
                break;
            }
            let weight = if k == l {
                table.mu(k, k)
            } else {
                table.mu(k, l) + table.mu(l, k)
            };
            for a in &modes[k] {
                for b in &modes[l] {
                    let coeff = weight * a.coeff * b.coeff;
                    if coeff != 0.0 {
                        source.add(coeff, a.tpow + b.tpow, a.rate + b.rate);
                    }
                }
            }
            // Each distinct source term yields at least one output term, so
            // an over-cap source already decides the fallback; bail before
            // burning through the remaining pair products.
            if source.len() > opts.term_cap {
                return Err(BuildError::TermCapExceeded);
            }
        }

        let mut out = TermBag::new(opts.resonance_tol);
        if g0.coeff(n) != 0.0 {
            out.add(g0.coeff(n), 0, lambda_n);
        }
        for ((tpow, _), (rate, coeff)) in source.drain_sorted() {
            if coeff.abs() <= opts.prune_eps {
                continue;
            }
            duhamel_term(&mut out, coeff, tpow, rate, lambda_n, opts.resonance_tol);
        }

        let terms = out.into_terms(opts.prune_eps);
        if terms.len() > opts.term_cap {
            return Err(BuildError::TermCapExceeded);
        }
        modes.push(terms);
    }

    Ok(ExpSumSolution { modes })
}

/// Integrate one forcing term `c · t^p · e^{-r t}` against the semigroup of
/// rate `λ` and push the resulting terms.
///
/// For `δ = λ - r` away from zero,
///
/// ```text
/// ∫₀^t e^{-λ(t-τ)} τ^p e^{-rτ} dτ
///   = Σ_{i=0}^{p} (-1)^i (p!/(p-i)!) t^{p-i} e^{-rt} / δ^{i+1}
///     - (-1)^p p! e^{-λt} / δ^{p+1},
/// ```
/// and in the confluent case the integral is `t^{p+1} e^{-λt} / (p+1)`.
fn duhamel_term(out: &mut TermBag, c: f64, p: u32, r: f64, lambda: f64, resonance_tol: f64) {
    let scale = r.abs().max(lambda.abs()).max(1.0);
    if (r - lambda).abs() <= resonance_tol * scale {
        out.add(c / f64::from(p + 1), p + 1, lambda);
        return;
    }
    let delta = lambda - r;
    let mut falling = 1.0; // p! / (p-i)!
    let mut sign = 1.0;
    let mut delta_pow = delta;
    for i in 0..=p {
        out.add(c * sign * falling / delta_pow, p - i, r);
        if i < p {
            falling *= f64::from(p - i);
            sign = -sign;
            delta_pow *= delta;
        }
    }
    // Here falling = p!, sign = (-1)^p, delta_pow = δ^{p+1}.
    out.add(-c * sign * falling / delta_pow, 0, lambda);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn eval_terms(terms: &[ExpTerm], t: f64) -> f64 {
        terms
            .iter()
            .map(|term| term.coeff * t.powi(term.tpow as i32) * (-term.rate * t).exp())
            .sum()
    }

    fn duhamel(c: f64, p: u32, r: f64, lambda: f64) -> Vec<ExpTerm> {
        let mut bag = TermBag::new(1e-9);
        duhamel_term(&mut bag, c, p, r, lambda, 1e-9);
        bag.into_terms(1e-300)
    }

    /// The closed-form primitive must match direct quadrature of
    /// ∫₀^t e^{-λ(t-τ)} c τ^p e^{-rτ} dτ, including for polynomial forcing.
    #[test]
    fn duhamel_primitive_matches_quadrature() {
        for &(c, p, r, lambda) in &[
            (0.7, 0u32, 0.3, 1.1),
            (-1.3, 1, 0.9, 0.4),
            (0.5, 2, 1.7, 0.6),
            (1.0, 3, 0.2, 2.5),
        ] {
            let terms = duhamel(c, p, r, lambda);
            for &t in &[0.0_f64, 0.4, 1.0, 3.0] {
                let direct = integrate(
                    |tau: f64| {
                        c * (-lambda * (t - tau)).exp() * tau.powi(p as i32) * (-r * tau).exp()
                    },
                    -1e-12,
                    t.max(1e-12),
                    1e-13,
                    false,
                )
                .unwrap()
                .value;
                let closed = eval_terms(&terms, t);
                assert!(
                    (closed - direct).abs() < 1e-10,
                    "c={c},p={p},r={r},λ={lambda},t={t}: {closed} vs {direct}"
                );
            }
        }
    }

    /// Exact and near-resonant rates take the confluent `t^{p+1} e^{-λt}`
    /// branch instead of dividing by the vanishing gap.
    #[test]
    fn confluent_branch_on_resonance() {
        let lambda = 0.8;
        let exact = duhamel(2.0, 0, lambda, lambda);
        assert_eq!(exact.len(), 1);
        assert_eq!(exact[0].tpow, 1);
        assert_eq!(exact[0].rate, lambda);
        assert_eq!(exact[0].coeff, 2.0);

        let near = duhamel(2.0, 1, lambda * (1.0 + 1e-12), lambda);
        assert_eq!(near.len(), 1);
        assert_eq!(near[0].tpow, 2);
        assert!((near[0].coeff - 1.0).abs() < 1e-14);

        // And the confluent value agrees with quadrature.
        let t = 1.7;
        let direct = integrate(
            |tau: f64| 2.0 * (-lambda * (t - tau)).exp() * (-lambda * tau).exp(),
            0.0,
            t,
            1e-13,
            false,
        )
        .unwrap()
        .value;
        assert!((eval_terms(&exact, t) - direct).abs() < 1e-12);
    }

    /// Term merging folds matching (power, rate) pairs and prunes zeros.
    #[test]
    fn term_bag_merges_and_prunes() {
        let mut bag = TermBag::new(1e-9);
        bag.add(1.0, 0, 0.5);
        bag.add(2.0, 0, 0.5 + 1e-13); // same bucket
        bag.add(-3.0, 0, 0.5 + 2e-13); // cancels the bucket entirely
        bag.add(1.0, 1, 0.5); // different power survives
        bag.add(1.0, 0, 0.9); // different rate survives
        let terms = bag.into_terms(1e-300);
        assert_eq!(terms.len(), 2);
    }
}
