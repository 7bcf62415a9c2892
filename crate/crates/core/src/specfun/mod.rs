//! Special functions used by the channel model and the rate-control solvers.
//!
//! Everything here is a pure function of its arguments. The plain entry points
//! (`bessel_k`, `gamma_upper_reg`, ...) run at machine precision; the `*_with`
//! variants take an explicit [`Precision`].

mod bessel;
mod expint;
mod gamma;
mod lambert;
mod normal;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use expint::{exp_integral_e1, exp_integral_e1_scaled, exp_integral_e1_with};
pub use gamma::{gamma_lower_reg, gamma_upper, gamma_upper_reg, gamma_upper_reg_with, ln_gamma_upper_reg, log_gamma};
pub use lambert::{lambert_w0, lambert_w0_with};
pub use normal::{gauss_q, gauss_q_inv};

pub(crate) use gamma::ln_gamma_unchecked;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Stopping rule for series, continued fractions and iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            rel_tol: 1e-12,
            max_iter: 200,
        }
    }
}

impl Precision {
    /// Stops only when the next term no longer changes the result in double precision.
    pub const fn machine() -> Self {
        Precision {
            rel_tol: f64::EPSILON,
            max_iter: 5000,
        }
    }

    pub fn new(rel_tol: f64, max_iter: usize) -> crate::Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(crate::Error::param("rel_tol", "must be > 0"));
        }
        if max_iter == 0 {
            return Err(crate::Error::param("max_iter", "must be >= 1"));
        }
        Ok(Precision { rel_tol, max_iter })
    }
}
