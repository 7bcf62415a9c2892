//! Finite-blocklength error model (normal approximation) and its fading averages.

use crate::channel::{product_cdf, product_pdf, FadingParams, SystemParams};
use crate::quad::Quadrature;
use crate::specfun::gauss_q;
use crate::{Error, Result};
use std::f64::consts::LN_2;
use std::sync::atomic::{AtomicBool, Ordering};

/// Message size k (bits) sent over n channel uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub k: f64,
    pub n: u32,
}

static SHORT_BLOCK_WARNED: AtomicBool = AtomicBool::new(false);

impl RatePoint {
    /// Accepts n < 100 but logs a one-time warning; the normal approximation
    /// is only trusted from about 100 channel uses on.
    pub fn new(k: f64, n: u32) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::param("k", format!("{k} is not >= 0")));
        }
        if n == 0 {
            return Err(Error::param("n", "need at least one channel use"));
        }
        if n < 100 && !SHORT_BLOCK_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!("n = {n} < 100: normal approximation may be inaccurate");
        }
        Ok(RatePoint { k, n })
    }

    pub fn rate(&self) -> f64 {
        self.k / self.n as f64
    }

    /// SNR at which the rate equals capacity, 2^{k/n} − 1.
    pub fn snr_threshold(&self) -> f64 {
        (self.rate() * LN_2).exp_m1()
    }
}

/// Shannon capacity log₂(1 + γ) in bits per channel use.
pub fn capacity(gamma: f64) -> f64 {
    gamma.ln_1p() / LN_2
}

/// Channel dispersion 1 − 1/(1 + γ)².
pub fn dispersion(gamma: f64) -> f64 {
    let r = 1.0 / (1.0 + gamma);
    1.0 - r * r
}

/// Block error probability of the normal approximation,
/// Q((C(γ) − k/n)·ln 2 / √(V(γ)/n)). At γ = 0 the limit is 1 for k > 0 and ½ for k = 0.
pub fn awgn_error(gamma: f64, rp: &RatePoint) -> f64 {
    if gamma <= 0.0 {
        return if rp.k > 0.0 { 1.0 } else { 0.5 };
    }
    if gamma == f64::INFINITY {
        return 0.0;
    }
    let n = rp.n as f64;
    let arg = (gamma.ln_1p() - rp.rate() * LN_2) / (dispersion(gamma) / n).sqrt();
    gauss_q(arg)
}

/// Maximum message size with error exactly ε at SNR γ:
/// n·C(γ) − √(n·V(γ))·Q⁻¹(ε)·log₂e. `q_inv_eps` is Q⁻¹(ε).
pub fn max_message_size(gamma: f64, n: u32, q_inv_eps: f64) -> f64 {
    let n = n as f64;
    n * capacity(gamma) - (n * dispersion(gamma)).sqrt() * q_inv_eps / LN_2
}

/// Distribution of W used by [`avg_error_fading_under`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WLaw {
    /// W = h·ḡ with the system's fading parameters.
    Product,
    /// Deterministic W (no fading).
    Point(f64),
}

/// Default accuracy for error averages: tight relative tolerance and an
/// absolute floor far below any reliability target of interest.
pub const ERROR_QUAD: Quadrature = Quadrature {
    abs_tol: 1e-15,
    rel_tol: 1e-9,
    max_segments: 2000,
};

/// Average block error E_W[ε(γ(W), k, n)].
pub fn avg_error_fading(sp: &SystemParams, rp: &RatePoint) -> Result<f64> {
    avg_error_fading_under(sp, rp, WLaw::Product, &ERROR_QUAD)
}

pub fn avg_error_fading_under(sp: &SystemParams, rp: &RatePoint, law: WLaw, quad: &Quadrature) -> Result<f64> {
    match law {
        WLaw::Point(w) => Ok(awgn_error(sp.snr_gain() * w, rp)),
        WLaw::Product => {
            let fp = sp.fading;
            expected_error(|w| pdf_or_zero(&fp, w), sp.snr_gain(), rp, quad)
        }
    }
}

fn pdf_or_zero(fp: &FadingParams, w: f64) -> f64 {
    if w > 0.0 {
        product_pdf(fp, w).unwrap_or(0.0)
    } else {
        0.0
    }
}

/// Average block error over ḡ with the WET gain pinned at h:
/// ∫ ε(γ(h·ḡ), k, n) f_Ḡ(ḡ) dḡ.
pub fn avg_error_given_h(sp: &SystemParams, rp: &RatePoint, h: f64, quad: &Quadrature) -> Result<f64> {
    if h <= 0.0 {
        return Ok(awgn_error(0.0, rp));
    }
    let fp = sp.fading;
    expected_error(|g| fp.pdf_gbar(g), sp.snr_gain() * h, rp, quad)
}

/// Values of x (with γ = gain·x) where the Q argument of ε is about −6, 0 and +6.
/// The error drops from ≈1 to ≈0 between the outer two.
pub(crate) fn error_front(rp: &RatePoint, gain: f64) -> Vec<f64> {
    if rp.k <= 0.0 {
        return Vec::new();
    }
    let n = rp.n as f64;
    let spread = 6.0 * (dispersion(rp.snr_threshold()) / n).sqrt() / LN_2;
    [-spread, 0.0, spread]
        .iter()
        .map(|dc| ((rp.rate() + dc) * LN_2).exp_m1() / gain)
        .filter(|x| *x > 0.0 && x.is_finite())
        .collect()
}

/// ∫₀^∞ ε(gain·x, k, n) p(x) dx for a unit-scale density p. The range is split
/// around the bulk of p and around the steep error front.
fn expected_error<P: Fn(f64) -> f64>(pdf: P, gain: f64, rp: &RatePoint, quad: &Quadrature) -> Result<f64> {
    let mut points = vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
    points.extend(error_front(rp, gain));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let last = *points.last().expect("points always contain 0");
    let value = quad.integrate_pieces(
        |x| {
            let p = pdf(x);
            if p == 0.0 {
                0.0
            } else {
                awgn_error(gain * x, rp) * p
            }
        },
        &points,
        Some((0.25 * last).max(1.0)),
    )?;
    Ok(value.clamp(0.0, 1.0))
}

/// Outage probability P[γ < 2^{k/n} − 1], the n → ∞ limit of the average error.
pub fn asymptotic_outage(sp: &SystemParams, rp: &RatePoint) -> f64 {
    product_cdf(&sp.fading, rp.snr_threshold() / sp.snr_gain())
}
