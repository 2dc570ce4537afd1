//! Embedded Dormand-Prince 4(5) integration of the truncated cascade.
//!
//! Independent of the exponential-sum route on purpose: the two solvers
//! cross-validate each other. The right-hand side is assembled directly from
//! the table, `∂_t g = -Λ g + Γ(g, g)`, and costs O(N²) per evaluation.

use super::{ModeVector, Trajectory};
use crate::spectrum::SpectralTable;
use crate::{Error, Result};

// Dormand-Prince coefficients; the last stage row doubles as the 5th-order
// weights (FSAL).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 5_000_000;

pub(super) fn solve(
    table: &SpectralTable,
    g0: &ModeVector,
    t_grid: &[f64],
    rk_tol: f64,
    guard: f64,
) -> Result<Trajectory> {
    let n = g0.coeffs().len();
    let rhs = |y: &[f64], out: &mut [f64]| {
        let y0 = y[0];
        for (m, slot) in out.iter_mut().enumerate() {
            let lam = table.lambda(m);
            let mut acc = -lam * y[m] - y0 * y[m] * lam;
            for k in 1..m {
                acc += table.mu(k, m - k) * y[k] * y[m - k];
            }
            *slot = acc;
        }
    };

    // The initial condition lives at t = 0 regardless of where the grid
    // starts.
    let mut y = g0.coeffs().to_vec();
    let mut t = 0.0;
    let mut states = Vec::with_capacity(t_grid.len());

    // The cascade's fastest scale is the top eigenvalue.
    let mut h = (0.1 / table.lambda(table.n_max()).max(1.0)).min(1e-2);
    let mut k = vec![vec![0.0; n]; 7];
    let mut steps = 0usize;

    rhs(&y, &mut k[0]);
    check_guard(&y, 0.0, guard)?;
    let mut y_try = vec![0.0; n];
    let mut y5 = vec![0.0; n];

    for &t_target in t_grid {
        while t < t_target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::NonConvergence {
                    what: "adaptive Runge-Kutta".into(),
                    achieved: t_target - t,
                    requested: 0.0,
                    evaluations: steps,
                });
            }
            let h_step = h.min(t_target - t);

            for stage in 0..6 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(stage + 1) {
                        let a = A[stage][j];
                        if a != 0.0 {
                            acc += h_step * a * kj[i];
                        }
                    }
                    y_try[i] = acc;
                }
                rhs(&y_try, &mut k[stage + 1]);
            }

            let mut err_sq = 0.0;
            for i in 0..n {
                let mut acc5 = y[i];
                let mut acc4 = y[i];
                for j in 0..7 {
                    acc5 += h_step * B5[j] * k[j][i];
                    acc4 += h_step * B4[j] * k[j][i];
                }
                y5[i] = acc5;
                let scale = rk_tol + rk_tol * y[i].abs().max(acc5.abs());
                let e = (acc5 - acc4) / scale;
                err_sq += e * e;
            }
            let err = (err_sq / n as f64).sqrt();

            if !err.is_finite() {
                // Stage overflow: shrink hard and retry.
                h = (h_step * 0.2).max(1e-14);
                continue;
            }
            if err <= 1.0 {
                t += h_step;
                std::mem::swap(&mut y, &mut y5);
                check_guard(&y, t, guard)?;
                // FSAL: stage 7 evaluated at the accepted point.
                rhs(&y, &mut k[6]);
                k.swap(0, 6);
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = (h_step * factor).max(1e-14);
        }
        states.push(ModeVector::from_coeffs(y.clone()));
    }

    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}

fn check_guard(y: &[f64], t: f64, guard: f64) -> Result<()> {
    for (mode, &v) in y.iter().enumerate() {
        if !v.is_finite() || v.abs() > guard {
            return Err(Error::NumericBlowup {
                mode,
                t,
                value: v,
                guard,
            });
        }
    }
    Ok(())
}
