use super::{max_satisfying, InverseMethod, ReliabilityTarget, SchemeOutcome};
use crate::channel::{product_cdf_inv_approx, product_cdf_inv_numeric, FadingParams, SystemParams};
use crate::fbl::{avg_error_fading, RatePoint};
use crate::specfun::lambert_w0;
use crate::{Error, Result};
use std::f64::consts::E;

/// F_W⁻¹(ε) from the chosen source. The closed form falls back to the numeric
/// inverse when m₂M = m₁ or when its Lambert argument leaves [−1/e, 0).
pub fn inverse_cdf(fp: &FadingParams, eps: f64, method: InverseMethod) -> Result<f64> {
    match method {
        InverseMethod::Numeric => product_cdf_inv_numeric(fp, eps),
        InverseMethod::ClosedForm => match product_cdf_inv_approx(fp, eps) {
            Ok(w) => Ok(w),
            Err(Error::Unsupported(why) | Error::Infeasible(why)) => {
                log::debug!("closed-form inverse unavailable ({why}); using numeric inverse");
                product_cdf_inv_numeric(fp, eps)
            }
            Err(e) => Err(e),
        },
    }
}

/// χ = M·ψ·F_W⁻¹(ε_th).
pub fn ftr_chi(sp: &SystemParams, eps_th: f64, method: InverseMethod) -> Result<f64> {
    Ok(sp.fading.antennas as f64 * sp.psi * inverse_cdf(&sp.fading, eps_th, method)?)
}

/// k = n·log₂(1 + (v/n)·χ).
pub fn ftr_rate_from_chi(chi: f64, v: u32, n: u32) -> f64 {
    let n = n as f64;
    n * (v as f64 / n * chi).ln_1p() / std::f64::consts::LN_2
}

/// Fixed message size under the outage model; infeasible when it falls below k₀.
pub fn ftr_k_asymptotic(sp: &SystemParams, rt: &ReliabilityTarget, method: InverseMethod) -> Result<SchemeOutcome> {
    let chi = ftr_chi(sp, rt.eps_th, method)?;
    let k = ftr_rate_from_chi(chi, sp.v, sp.n);
    if k < rt.k0 as f64 {
        return Ok(SchemeOutcome::infeasible());
    }
    Ok(SchemeOutcome {
        feasible: true,
        k_bits: k,
        kbar: k,
        p_k0: if k == rt.k0 as f64 { 1.0 } else { 0.0 },
    })
}

/// n*/δ before rounding: χ / ((χ−1)/W((χ−1)/e) + χ − 1).
pub fn ftr_n_star_ratio(chi: f64) -> Result<f64> {
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(Error::domain("ftr_n_star_ratio", format!("chi = {chi}, need chi > 0")));
    }
    let t = chi - 1.0;
    // (χ−1)/W((χ−1)/e) → e as χ → 1; first-order expansion e + (χ−1) near the limit
    let y = if t.abs() < 1e-6 { E + t } else { t / lambert_w0(t / E)? };
    Ok(chi / (y + t))
}

/// Optimal WIT and WET blocklengths (n*, v*) for a delay budget δ.
pub fn ftr_optimal_blocklengths(delta: u32, chi: f64) -> Result<(u32, u32)> {
    if delta < 2 {
        return Err(Error::param("delta", format!("{delta} is below 2 channel uses")));
    }
    let ratio = ftr_n_star_ratio(chi)?;
    let n = (ratio * delta as f64).round().clamp(1.0, (delta - 1) as f64) as u32;
    Ok((n, delta - n))
}

/// Largest integer k with average finite-blocklength error ≤ ε_th, searched
/// from the floor of the asymptotic message size.
pub fn ftr_k_fbl(sp: &SystemParams, rt: &ReliabilityTarget, method: InverseMethod) -> Result<SchemeOutcome> {
    let asym = ftr_k_asymptotic(sp, rt, method)?;
    if !asym.feasible {
        return Ok(SchemeOutcome::infeasible());
    }
    let ok = |k: u64| -> Result<bool> { Ok(avg_error_fading(sp, &RatePoint::new(k as f64, sp.n)?)? <= rt.eps_th) };
    let start = asym.k_bits.floor() as u64;
    match max_satisfying(rt.k0 as u64, start, ok)? {
        None => Ok(SchemeOutcome::infeasible()),
        Some(k) => Ok(SchemeOutcome {
            feasible: true,
            k_bits: k as f64,
            kbar: k as f64,
            p_k0: if k == rt.k0 as u64 { 1.0 } else { 0.0 },
        }),
    }
}
