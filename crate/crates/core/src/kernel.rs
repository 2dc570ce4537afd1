//! The Debye-Yukawa angular collision kernel and its weighted trigonometric
//! moments.
//!
//! The kernel is known only up to two-sided constants; this crate adopts the
//! equality representative
//!
//! ```text
//! β(θ) = (sin θ)^{-1} (log 1/sin θ)^{2/s - 1},   0 < θ ≤ π/4,
//! ```
//!
//! with natural log and unit constant, recorded in
//! [`CollisionKernel::representative_constant`]. For `s = 2` the log power
//! vanishes and `β(θ) = 1/sin θ` exactly. Everything downstream (eigenvalues,
//! couplings) is a weighted moment `∫ β sin^{2k} cos^{2l} dθ` of this kernel.

use crate::quad::{integrate_with, QuadOptions};
use crate::{Error, Result};

/// Support cutoff of the angular kernel.
pub const THETA_MAX: f64 = std::f64::consts::FRAC_PI_4;

/// Integration route for [`CollisionKernel::moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentRoute {
    /// Direct quadrature in the angle θ.
    Theta,
    /// Quadrature after the substitution `x = sin²θ`:
    /// `2^{-2/s} ∫₀^{1/2} (log 1/x)^{2/s-1} x^{k-1} (1-x)^{l-1/2} dx`.
    Substituted,
}

/// The angular kernel `β(θ)` parameterized by `s ∈ (0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionKernel {
    /// Potential decay exponent; the singularity strength is `2/s - 1`.
    pub s: f64,
    /// Angular support is `(0, theta_max]`.
    pub theta_max: f64,
    /// The adopted two-sided representative constant (always 1 here).
    pub representative_constant: f64,
}

impl CollisionKernel {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 2.0) {
            return Err(Error::DomainError {
                what: "CollisionKernel".into(),
                detail: format!("s = {s} outside (0, 2]"),
            });
        }
        Ok(Self {
            s,
            theta_max: THETA_MAX,
            representative_constant: 1.0,
        })
    }

    /// Exponent of the logarithmic factor, `2/s - 1 >= 0`.
    pub fn log_power(&self) -> f64 {
        2.0 / self.s - 1.0
    }

    /// `β(θ)` on `(0, π/4]`.
    pub fn beta(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta <= self.theta_max) {
            return Err(Error::DomainError {
                what: "beta".into(),
                detail: format!("θ = {theta} outside (0, {}]", self.theta_max),
            });
        }
        Ok(self.representative_constant * self.log_beta(theta).exp())
    }

    /// `log β(θ)` without the domain check; evaluating through the log keeps
    /// integrands finite arbitrarily close to the singularity.
    pub(crate) fn log_beta(&self, theta: f64) -> f64 {
        let ln_sin = theta.sin().ln();
        -ln_sin + self.log_power() * (-ln_sin).ln()
    }

    /// Weighted moment `∫₀^{π/4} β(θ) sin^{2k}θ cos^{2l}θ dθ`.
    ///
    /// `k = 0` makes the integrand non-integrable and is rejected; such terms
    /// only ever appear inside cancelling differences (see the eigenvalue
    /// integrals). Both routes target relative accuracy `tol` so that tiny
    /// high-order moments keep their significant digits.
    pub fn moment(&self, k: u32, l: u32, route: MomentRoute, tol: f64) -> Result<f64> {
        if k == 0 {
            return Err(Error::DivergentMoment);
        }
        let opts = QuadOptions {
            singular_at_a: true,
            ..QuadOptions::relative(tol)
        };
        match route {
            MomentRoute::Theta => {
                let kf = f64::from(k);
                let lf = f64::from(l);
                let f = |theta: f64| {
                    let log_val = self.log_beta(theta)
                        + 2.0 * kf * theta.sin().ln()
                        + 2.0 * lf * theta.cos().ln();
                    log_val.exp()
                };
                Ok(self.representative_constant
                    * integrate_with(f, 0.0, self.theta_max, &opts)?.value)
            }
            MomentRoute::Substituted => {
                let q = self.log_power();
                let kf = f64::from(k);
                let lf = f64::from(l);
                let f = |x: f64| {
                    let ln_x = x.ln();
                    let log_val = q * (-ln_x).ln() + (kf - 1.0) * ln_x + (lf - 0.5) * (-x).ln_1p();
                    log_val.exp()
                };
                let scale = (-2.0 / self.s * std::f64::consts::LN_2).exp();
                Ok(
                    self.representative_constant
                        * scale
                        * integrate_with(f, 0.0, 0.5, &opts)?.value,
                )
            }
        }
    }
}
