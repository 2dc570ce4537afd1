//! End-to-end certification suite.
//!
//! Twelve checks covering the whole pipeline: closed-form spot values of the
//! lowest eigenvalue and coupling, eigenvalue super-additivity, boundedness
//! of the asymptote and convolution-sum ratios, dual-route agreement of the
//! coupling moments, solver cross-validation, the energy/monotonicity/rate
//! certifications on a battery of seeded small-data runs, the Young-type
//! weight inequality, basis integrity, and the structural (triangularity)
//! properties of the cascade. Each check reports pass/fail with a one-line
//! diagnostic; the CLI `verify` subcommand and the acceptance test target
//! both run this suite.

use crate::analysis::{
    certify_energy_inequality, certify_monotone_decay, certify_rates, fit_c0_hat,
    trilinear_constant_probe, young_bound_check, CertificationReport, ENERGY_SLACK, MONOTONE_SLACK,
};
use crate::galerkin::{
    gamma_apply, solve_triangular, time_grid, ExpSumSolution, ModeVector, SolveMethod,
    SolverOptions, Trajectory,
};
use crate::kernel::{CollisionKernel, MomentRoute};
use crate::quad::integrate;
use crate::specfun::{radial_eigenfunction, RadialEigenfunction};
use crate::spectrum::{lambda_radial, log_harmonic_scale, SpectralTable};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

/// Suite configuration.
#[derive(Debug, Clone, Default)]
pub struct AcceptanceConfig {
    /// Directory for spectral-table caches; tables are rebuilt when absent.
    pub cache_dir: Option<PathBuf>,
    /// Quadrature tolerance for table construction.
    pub tol: f64,
}

impl AcceptanceConfig {
    pub fn with_defaults() -> Self {
        Self {
            cache_dir: None,
            tol: crate::quad::DEFAULT_TOL,
        }
    }
}

/// One pass/fail line of the suite.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub index: usize,
    pub name: String,
    pub pass: bool,
    pub runtime_s: f64,
    pub detail: String,
}

impl CriterionOutcome {
    /// The line printed by the CLI and the acceptance test.
    pub fn display_line(&self) -> String {
        format!(
            "[{}] criterion {:2} — {} ({:.2}s): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.index,
            self.name,
            self.runtime_s,
            self.detail
        )
    }
}

const S_VALUES: [f64; 3] = [0.5, 1.0, 2.0];
const RUN_SEEDS: std::ops::Range<u64> = 1..21;
const RUN_NORM: f64 = 0.05;
const RUN_N: usize = 32;
const RUN_T_MAX: f64 = 5.0;

/// Run the full suite. Table construction is charged to the first criterion
/// that needs the tables (criterion 2); later criteria reuse them.
pub fn run_acceptance(cfg: &AcceptanceConfig) -> Result<Vec<CriterionOutcome>> {
    let tol = if cfg.tol > 0.0 {
        cfg.tol
    } else {
        crate::quad::DEFAULT_TOL
    };
    let mut outcomes = Vec::with_capacity(12);

    outcomes.push(run_criterion(
        1,
        "closed-form spot values (s = 2)",
        Some(Duration::from_secs(1)),
        Duration::ZERO,
        || criterion_spot_values(tol),
    ));

    // Shared spectral tables at N = 256 for the eigenvalue and coupling
    // scans; their construction counts toward criterion 2's budget.
    let build_start = Instant::now();
    let tables = build_tables(cfg, tol)?;
    let build_time = build_start.elapsed();

    outcomes.push(run_criterion(
        2,
        "eigenvalue super-additivity, k+l ≤ 64",
        Some(Duration::from_secs(60)),
        build_time,
        || criterion_superadditivity(&tables),
    ));

    outcomes.push(run_criterion(
        3,
        "asymptote-ratio boundedness, n ≤ 512",
        Some(Duration::from_secs(300)),
        Duration::ZERO,
        || criterion_asymptote_window(tol),
    ));

    outcomes.push(run_criterion(
        4,
        "convolution-sum boundedness, n ≤ 256",
        None,
        Duration::ZERO,
        || criterion_convolution_stability(&tables),
    ));

    outcomes.push(run_criterion(
        5,
        "dual-route coupling agreement, k+l ≤ 40",
        None,
        Duration::ZERO,
        || criterion_dual_route(tol),
    ));

    let table32 = tables
        .iter()
        .find(|(s, _)| *s == 1.0)
        .expect("s = 1 table present")
        .1
        .truncated(RUN_N)?;

    outcomes.push(run_criterion(
        6,
        "solver cross-validation (exp-sum vs Runge-Kutta)",
        Some(Duration::from_secs(60)),
        Duration::ZERO,
        || criterion_solver_cross_validation(&table32),
    ));

    // The twenty seeded small-data runs shared by criteria 7-9; solving is
    // charged to criterion 7.
    let runs_start = Instant::now();
    let runs = small_data_runs(&table32)?;
    let runs_time = runs_start.elapsed();

    outcomes.push(run_criterion(
        7,
        "energy inequality on 20 seeded runs",
        None,
        runs_time,
        || criterion_energy(&table32, &runs),
    ));

    outcomes.push(run_criterion(
        8,
        "monotone decay on 20 seeded runs",
        None,
        Duration::ZERO,
        || criterion_monotone(&table32, &runs),
    ));

    outcomes.push(run_criterion(
        9,
        "smoothing-rate bounds with fitted constants",
        None,
        Duration::ZERO,
        || criterion_rates(&table32, &runs),
    ));

    outcomes.push(run_criterion(
        10,
        "Young weight inequality, 10⁴ random samples",
        None,
        Duration::ZERO,
        criterion_young,
    ));

    outcomes.push(run_criterion(
        11,
        "basis orthonormality and oscillator eigenrelation",
        None,
        Duration::ZERO,
        || criterion_basis_integrity(tol),
    ));

    outcomes.push(run_criterion(
        12,
        "triangularity property tests, 100 cases each",
        None,
        Duration::ZERO,
        || criterion_triangularity(&tables),
    ));

    Ok(outcomes)
}

fn run_criterion<F>(
    index: usize,
    name: &str,
    limit: Option<Duration>,
    extra: Duration,
    body: F,
) -> CriterionOutcome
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (mut pass, mut detail) = match body() {
        Ok(outcome) => outcome,
        Err(err) => (false, format!("error: {err}")),
    };
    let runtime = start.elapsed() + extra;
    if let Some(limit) = limit {
        if runtime > limit {
            pass = false;
            detail.push_str(&format!(
                " [runtime {:.2}s exceeded limit {:.0}s]",
                runtime.as_secs_f64(),
                limit.as_secs_f64()
            ));
        }
    }
    CriterionOutcome {
        index,
        name: name.to_string(),
        pass,
        runtime_s: runtime.as_secs_f64(),
        detail,
    }
}

fn build_tables(cfg: &AcceptanceConfig, tol: f64) -> Result<Vec<(f64, SpectralTable)>> {
    S_VALUES
        .iter()
        .map(|&s| {
            let kernel = CollisionKernel::new(s)?;
            let table = match &cfg.cache_dir {
                Some(dir) => SpectralTable::load_or_build(dir, &kernel, 256, tol)?.0,
                None => SpectralTable::build(&kernel, 256, tol)?,
            };
            Ok((s, table))
        })
        .collect()
}

fn criterion_spot_values(tol: f64) -> Result<(bool, String)> {
    let kernel = CollisionKernel::new(2.0)?;
    let lambda2 = lambda_radial(&kernel, 2, tol)?;
    let lambda2_exact = 2.0 / 3.0 - 2.0_f64.sqrt() / 6.0;
    let mu11 = crate::spectrum::mu(&kernel, 1, 1, tol)?;
    let mu11_exact = (10.0_f64 / 3.0).sqrt() * (1.0 - 2.0_f64.powf(-1.5)) / 3.0;
    let d_lambda = (lambda2 - lambda2_exact).abs();
    let d_mu = (mu11 - mu11_exact).abs();
    Ok((
        d_lambda <= 1e-9 && d_mu <= 1e-9,
        format!("|Δλ₂| = {d_lambda:.2e}, |Δμ₁₁| = {d_mu:.2e}"),
    ))
}

fn criterion_superadditivity(tables: &[(f64, SpectralTable)]) -> Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, table) in tables {
        let small = table.truncated(64)?;
        let (margin, (k, l)) = small.super_additivity_margin();
        pass &= margin > 0.0;
        parts.push(format!("s = {s}: min margin {margin:.4e} at ({k},{l})"));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_asymptote_window(tol: f64) -> Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for &s in &S_VALUES {
        let kernel = CollisionKernel::new(s)?;
        let ratios = (2..=512usize)
            .into_par_iter()
            .map(|n| Ok(lambda_radial(&kernel, n, tol)? / log_harmonic_scale(s, n)))
            .collect::<Result<Vec<f64>>>()?;
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0_f64, f64::max);
        let spread = hi / lo;
        pass &= lo.is_finite() && hi.is_finite() && lo > 0.0 && spread < 50.0;
        parts.push(format!(
            "s = {s}: window [{lo:.4}, {hi:.4}], M/m = {spread:.2}"
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_convolution_stability(tables: &[(f64, SpectralTable)]) -> Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, table) in tables {
        let ratios: Vec<f64> = (2..=256).map(|n| table.convolution_sum_ratio(n)).collect();
        let finite = ratios.iter().all(|r| r.is_finite());
        // Stability across log-decades of n ending at 256: the maximum over
        // the last decade (26..=256) must not outgrow the maximum over the
        // middle decade (3..=25) by more than a factor 2.
        let max_over = |lo: usize, hi: usize| {
            ratios[(lo - 2)..=(hi - 2)]
                .iter()
                .copied()
                .fold(0.0_f64, f64::max)
        };
        let mid = max_over(3, 25);
        let last = max_over(26, 256);
        let growth = last / mid;
        pass &= finite && growth < 2.0;
        parts.push(format!(
            "s = {s}: max {:.4}, last/mid decade {growth:.3}",
            max_over(2, 256)
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_dual_route(tol: f64) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    let mut worst_at = (0.0, 0u32, 0u32);
    for &s in &S_VALUES {
        let kernel = CollisionKernel::new(s)?;
        let pairs: Vec<(u32, u32)> = (1..40u32)
            .flat_map(|k| (1..=(40 - k)).map(move |l| (k, l)))
            .collect();
        let deviations = pairs
            .par_iter()
            .map(|&(k, l)| {
                let theta = kernel.moment(k, l, MomentRoute::Theta, tol)?;
                let subst = kernel.moment(k, l, MomentRoute::Substituted, tol)?;
                Ok(((theta - subst) / theta.abs().max(f64::MIN_POSITIVE)).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        for (&(k, l), &dev) in pairs.iter().zip(&deviations) {
            if dev > worst {
                worst = dev;
                worst_at = (s, k, l);
            }
        }
    }
    Ok((
        worst <= 1e-9,
        format!(
            "worst relative deviation {worst:.2e} at s = {}, (k, l) = ({}, {})",
            worst_at.0, worst_at.1, worst_at.2
        ),
    ))
}

fn criterion_solver_cross_validation(table32: &SpectralTable) -> Result<(bool, String)> {
    let g0 = ModeVector::random_decay(RUN_N, RUN_NORM, 2.0, 2024);
    let grid = time_grid(10.0, 201);
    let opts = SolverOptions::default();
    let exact = solve_triangular(table32, &g0, &grid, SolveMethod::ExpSum, &opts)?;
    let numeric = solve_triangular(table32, &g0, &grid, SolveMethod::AdaptiveNumeric, &opts)?;
    let mut worst = 0.0_f64;
    for (a, b) in exact
        .trajectory
        .states
        .iter()
        .zip(&numeric.trajectory.states)
    {
        for n in 0..=RUN_N {
            worst = worst.max((a.coeff(n) - b.coeff(n)).abs());
        }
    }
    Ok((
        worst <= 1e-8 && !exact.used_fallback,
        format!("max coefficient discrepancy {worst:.2e}"),
    ))
}

struct SmallDataRun {
    seed: u64,
    g0_norm: f64,
    trajectory: Trajectory,
}

/// Solve the twenty seeded runs in closed form and sample each on a grid
/// refined until the trapezoidal dissipation integral is stable to 1e-8.
fn small_data_runs(table32: &SpectralTable) -> Result<Vec<SmallDataRun>> {
    RUN_SEEDS
        .map(|seed| {
            let g0 = ModeVector::random_decay(RUN_N, RUN_NORM, 2.0, seed);
            let out = solve_triangular(
                table32,
                &g0,
                &time_grid(RUN_T_MAX, 3),
                SolveMethod::ExpSum,
                &SolverOptions::default(),
            )?;
            let solution = out.expsum.expect("exp-sum route must succeed at N = 32");
            let trajectory = refined_trajectory(table32, &solution, RUN_T_MAX);
            Ok(SmallDataRun {
                seed,
                g0_norm: g0.l2_norm(),
                trajectory,
            })
        })
        .collect()
}

fn refined_trajectory(table: &SpectralTable, solution: &ExpSumSolution, t_max: f64) -> Trajectory {
    let sample = |steps: usize| -> Trajectory {
        let times = time_grid(t_max, steps);
        let states = times.iter().map(|&t| solution.eval(t)).collect();
        Trajectory { times, states }
    };
    let dissipation_integral = |traj: &Trajectory| -> f64 {
        let diss: Vec<f64> = traj
            .states
            .iter()
            .map(|g| {
                g.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(n, &c)| table.lambda(n) * c * c)
                    .sum()
            })
            .collect();
        let mut total = 0.0;
        for i in 1..traj.times.len() {
            total += 0.5 * (traj.times[i] - traj.times[i - 1]) * (diss[i] + diss[i - 1]);
        }
        total
    };

    let mut steps = 201;
    let mut traj = sample(steps);
    let mut estimate = dissipation_integral(&traj);
    while steps < 3201 {
        let finer_steps = steps * 2 - 1;
        let finer = sample(finer_steps);
        let finer_estimate = dissipation_integral(&finer);
        let stable = (finer_estimate - estimate).abs() < 1e-8;
        steps = finer_steps;
        traj = finer;
        estimate = finer_estimate;
        if stable {
            break;
        }
    }
    traj
}

fn summarize_runs(reports: &[(u64, CertificationReport)]) -> (bool, String) {
    let failures: Vec<&(u64, CertificationReport)> =
        reports.iter().filter(|(_, r)| !r.pass).collect();
    let worst = reports
        .iter()
        .map(|(_, r)| r.worst_margin)
        .fold(f64::INFINITY, f64::min);
    if failures.is_empty() {
        (true, format!("20/20 runs pass, worst margin {worst:.3e}"))
    } else {
        (
            false,
            format!(
                "{} runs fail (first: seed {}, t = {}, margin {:.3e})",
                failures.len(),
                failures[0].0,
                failures[0].1.worst_t,
                failures[0].1.worst_margin
            ),
        )
    }
}

fn criterion_energy(table32: &SpectralTable, runs: &[SmallDataRun]) -> Result<(bool, String)> {
    let reports: Vec<(u64, CertificationReport)> = runs
        .iter()
        .map(|run| {
            (
                run.seed,
                certify_energy_inequality(table32, &run.trajectory, run.g0_norm, ENERGY_SLACK),
            )
        })
        .collect();
    Ok(summarize_runs(&reports))
}

fn criterion_monotone(table32: &SpectralTable, runs: &[SmallDataRun]) -> Result<(bool, String)> {
    let reports: Vec<(u64, CertificationReport)> = runs
        .iter()
        .map(|run| {
            (
                run.seed,
                certify_monotone_decay(table32, &run.trajectory, MONOTONE_SLACK),
            )
        })
        .collect();
    Ok(summarize_runs(&reports))
}

fn criterion_rates(table32: &SpectralTable, runs: &[SmallDataRun]) -> Result<(bool, String)> {
    let c0_hat = fit_c0_hat(table32);

    // First pass fits the Shubin-order constant per run; the suite constant
    // is the maximum, and every run must pass with it.
    let mut c_s_hat = 1e-12_f64;
    for run in runs {
        let fit = certify_rates(table32, &run.trajectory, run.g0_norm, c0_hat, None);
        if let Some(&c) = fit.fitted_constants.get("c_s_hat") {
            c_s_hat = c_s_hat.max(c);
        }
    }
    let reports: Vec<(u64, CertificationReport)> = runs
        .iter()
        .map(|run| {
            (
                run.seed,
                certify_rates(table32, &run.trajectory, run.g0_norm, c0_hat, Some(c_s_hat)),
            )
        })
        .collect();
    let (pass, summary) = summarize_runs(&reports);
    Ok((
        pass,
        format!("{summary}; fitted c0_hat = {c0_hat:.6}, c_s_hat = {c_s_hat:.6}"),
    ))
}

fn criterion_young() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0usize;
    for _ in 0..10_000 {
        let x = (rng.random::<f64>() * 1e6_f64.ln()).exp();
        let tau = rng.random_range(0.01..5.0);
        let k = rng.random_range(1.0..10.0);
        let s = rng.random_range(0.05..1.95);
        let (h, bound) = young_bound_check(x.max(1.0), tau, k, s)?;
        if h < bound * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations in 10000 samples"),
    ))
}

fn criterion_basis_integrity(tol: f64) -> Result<(bool, String)> {
    // Orthonormality of φ_{n,0,0} through radial quadrature.
    let mut worst_gram = 0.0_f64;
    for n in 0..=8usize {
        for m in n..=8usize {
            let value = integrate(
                |r: f64| {
                    4.0 * std::f64::consts::PI
                        * r
                        * r
                        * radial_eigenfunction(n, r)
                        * radial_eigenfunction(m, r)
                },
                0.0,
                60.0,
                tol,
                false,
            )?
            .value;
            let target = if n == m { 1.0 } else { 0.0 };
            worst_gram = worst_gram.max((value - target).abs());
        }
    }

    // Harmonic-oscillator eigenrelation by radial finite differences.
    let h = 1e-3;
    let mut worst_eigen = 0.0_f64;
    for n in 0..=8usize {
        let phi = RadialEigenfunction::new(n);
        for &r in &[0.3, 0.9, 1.5, 2.1, 2.7] {
            let f0 = phi.eval(r);
            if f0.abs() < 1e-2 {
                continue;
            }
            let fp = phi.eval(r + h);
            let fm = phi.eval(r - h);
            let lap = (fp - 2.0 * f0 + fm) / (h * h) + 2.0 / r * (fp - fm) / (2.0 * h);
            let lhs = -lap + r * r / 4.0 * f0;
            let rhs = phi.oscillator_eigenvalue() * f0;
            worst_eigen = worst_eigen.max(((lhs - rhs) / rhs).abs());
        }
    }

    Ok((
        worst_gram <= 1e-9 && worst_eigen <= 1e-4,
        format!(
            "worst Gram deviation {worst_gram:.2e}, worst eigenrelation error {worst_eigen:.2e}"
        ),
    ))
}

fn criterion_triangularity(tables: &[(f64, SpectralTable)]) -> Result<(bool, String)> {
    let table = &tables.iter().find(|(s, _)| *s == 1.0).unwrap().1;
    let t24 = table.truncated(24)?;
    let t16 = table.truncated(16)?;
    let t10 = table.truncated(10)?;
    let opts = SolverOptions::default();
    let mut failures = BTreeMap::new();

    // Support growth of the bilinear term.
    let mut fail = 0;
    for seed in 0..100u64 {
        let m = 2 + (seed % 9) as usize;
        let mut g = ModeVector::random_decay(24, RUN_NORM, 1.0, seed);
        for n in (m + 1)..=24 {
            g.set_coeff(n, 0.0);
        }
        let out = gamma_apply(&t24, &g, &g)?;
        for (n, &c) in out.coeffs().iter().enumerate() {
            if (n < 4 || n > 2 * m) && c != 0.0 {
                fail += 1;
                break;
            }
        }
    }
    failures.insert("support-growth", fail);

    // Even-mode closure along trajectories.
    let mut fail = 0;
    let grid = time_grid(2.0, 5);
    for seed in 0..100u64 {
        let mut g0 = ModeVector::random_decay(24, RUN_NORM, 2.0, seed);
        for n in (3..=23usize).step_by(2) {
            g0.set_coeff(n, 0.0);
        }
        let out = solve_triangular(&t24, &g0, &grid, SolveMethod::ExpSum, &opts)?;
        for state in &out.trajectory.states {
            if (3..=23usize).step_by(2).any(|n| state.coeff(n) != 0.0) {
                fail += 1;
                break;
            }
        }
    }
    failures.insert("even-closure", fail);

    // Truncation consistency: solve at 16, project to 10 = solve at 10.
    let mut fail = 0;
    for seed in 0..100u64 {
        let g0 = ModeVector::random_decay(16, RUN_NORM, 2.0, seed);
        let g0_small = ModeVector::from_coeffs(g0.coeffs()[..=10].to_vec());
        let full = solve_triangular(&t16, &g0, &grid, SolveMethod::ExpSum, &opts)?;
        let reduced = solve_triangular(&t10, &g0_small, &grid, SolveMethod::ExpSum, &opts)?;
        'outer: for (a, b) in full
            .trajectory
            .states
            .iter()
            .zip(&reduced.trajectory.states)
        {
            for n in 0..=10 {
                if (a.coeff(n) - b.coeff(n)).abs() > 1e-12 {
                    fail += 1;
                    break 'outer;
                }
            }
        }
    }
    failures.insert("truncation-consistency", fail);

    let total: usize = failures.values().sum();
    let detail = failures
        .iter()
        .map(|(k, v)| format!("{k}: {v}/100 failures"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((total == 0, detail))
}

/// Empirical trilinear constant and the smallness threshold it implies;
/// reported by the CLI alongside the suite.
pub fn probe_constants(table: &SpectralTable, samples: usize, seed: u64) -> (f64, f64) {
    let c1 = trilinear_constant_probe(table, samples, seed);
    (c1, crate::analysis::epsilon0_estimate(c1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criterion_runner_applies_time_limit() {
        let outcome = run_criterion(
            99,
            "limit check",
            Some(Duration::from_nanos(1)),
            Duration::from_secs(1),
            || Ok((true, "ok".into())),
        );
        assert!(!outcome.pass);
        assert!(outcome.detail.contains("exceeded"));
    }

    #[test]
    fn criterion_runner_reports_errors_as_failures() {
        let outcome = run_criterion(98, "error check", None, Duration::ZERO, || {
            Err(crate::Error::DivergentMoment)
        });
        assert!(!outcome.pass);
        assert!(outcome.detail.contains("divergent"));
    }

    #[test]
    fn display_line_format() {
        let outcome = CriterionOutcome {
            index: 3,
            name: "demo".into(),
            pass: true,
            runtime_s: 0.5,
            detail: "fine".into(),
        };
        assert!(outcome.display_line().starts_with("[PASS] criterion  3"));
    }
}
