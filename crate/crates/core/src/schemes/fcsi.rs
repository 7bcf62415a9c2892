use super::{ReliabilityTarget, SchemeOutcome, ThresholdSolution};
use crate::channel::{product_cdf, product_pdf, product_sf, FadingParams, SystemParams};
use crate::fbl::{avg_error_fading, awgn_error, capacity, error_front, max_message_size, RatePoint};
use crate::quad::Quadrature;
use crate::roots::brent;
use crate::specfun::gauss_q_inv;
use crate::{Error, Result};
use std::f64::consts::LN_2;

const LHS_QUAD: Quadrature = Quadrature {
    abs_tol: 1e-15,
    rel_tol: 1e-11,
    max_segments: 2000,
};

const KBAR_QUAD: Quadrature = Quadrature {
    abs_tol: 1e-10,
    rel_tol: 1e-11,
    max_segments: 2000,
};

fn pdf_w(fp: &FadingParams, w: f64) -> f64 {
    if w > 0.0 {
        product_pdf(fp, w).unwrap_or(0.0)
    } else {
        0.0
    }
}

/// Left side of the threshold equation,
/// ∫₀^{w₀} ε(γ(w),k₀,n) f_W dw + ε(γ(w₀),k₀,n)·(1 − F_W(w₀)). Decreasing in w₀.
pub fn fcsi_lhs(sp: &SystemParams, k0: u32, w0: f64) -> Result<f64> {
    let rp = RatePoint::new(k0 as f64, sp.n)?;
    let gain = sp.snr_gain();
    let fp = sp.fading;
    let edge = awgn_error(gain * w0, &rp);
    if w0 <= 0.0 {
        return Ok(edge);
    }
    let mut points = vec![0.0];
    points.extend(
        [0.25, 0.5, 1.0, 2.0]
            .into_iter()
            .chain(error_front(&rp, gain))
            .filter(|&p| p > 0.0 && p < w0),
    );
    points.push(w0);
    points.sort_by(f64::total_cmp);
    let body = LHS_QUAD.integrate_pieces(|w| awgn_error(gain * w, &rp) * pdf_w(&fp, w), &points, None)?;
    Ok(body + edge * product_sf(&fp, w0))
}

/// Threshold w₀ solving `fcsi_lhs(w₀) = ε_th`, with ε* = ε(γ(w₀),k₀,n).
pub fn fcsi_threshold(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<ThresholdSolution> {
    sp.validate()?;
    rt.validate()?;
    let k0 = rt.k0;
    let rp = RatePoint::new(k0 as f64, sp.n)?;
    let avg = avg_error_fading(sp, &rp)?;
    if avg > rt.eps_th {
        return Err(Error::Infeasible(format!(
            "average error at k0 = {k0} is {avg:e} > {:e}",
            rt.eps_th
        )));
    }
    let g = |u: f64| fcsi_lhs(sp, k0, u.exp()).map(|l| l - rt.eps_th);
    let start = (rp.snr_threshold() / sp.snr_gain()).ln();
    let step = LN_2;
    let (mut lo, mut hi) = (start, start);
    let mut glo = g(lo)?;
    let mut ghi = glo;
    let mut tries = 0;
    while glo < 0.0 {
        hi = lo;
        ghi = glo;
        lo -= step;
        glo = g(lo)?;
        tries += 1;
        if tries > 200 {
            return Err(Error::convergence("fcsi_threshold", "no lower bracket"));
        }
    }
    while ghi > 0.0 {
        lo = hi;
        hi += step;
        ghi = g(hi)?;
        tries += 1;
        if tries > 400 {
            return Err(Error::convergence("fcsi_threshold", "no upper bracket"));
        }
    }
    let failed = std::cell::Cell::new(None);
    let root = brent(
        |u| match g(u) {
            Ok(v) => v,
            Err(e) => {
                failed.set(Some(e));
                f64::NAN
            }
        },
        lo,
        hi,
        1e-13,
        200,
    )?;
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let w0 = root.x.exp();
    Ok(ThresholdSolution {
        threshold: w0,
        eps_star: awgn_error(sp.snr_gain() * w0, &rp),
        iterations: root.iterations,
        residual: root.residual,
    })
}

/// Message size for W = w under the finite-blocklength rule.
pub fn fcsi_k(w: f64, ts: &ThresholdSolution, sp: &SystemParams, rt: &ReliabilityTarget) -> Result<f64> {
    if w <= ts.threshold {
        return Ok(rt.k0 as f64);
    }
    Ok(max_message_size(sp.snr_gain() * w, sp.n, gauss_q_inv(ts.eps_star)?))
}

/// Breakpoints for integrals of f_W above `from`, and the tail scale.
fn upper_points(from: f64) -> (Vec<f64>, f64) {
    let mut points = vec![from];
    points.extend([0.5, 1.0, 2.0, 4.0].into_iter().filter(|&p| p > from));
    let last = *points.last().expect("non-empty");
    (points, (0.25 * last).max(1.0))
}

/// k̄ = k₀·F_W(w₀) + ∫_{w₀}^∞ k(w) f_W dw.
pub fn fcsi_kbar(sp: &SystemParams, rt: &ReliabilityTarget, ts: &ThresholdSolution) -> Result<f64> {
    let fp = sp.fading;
    let gain = sp.snr_gain();
    let q = gauss_q_inv(ts.eps_star)?;
    let (points, scale) = upper_points(ts.threshold);
    let upper = KBAR_QUAD.integrate_pieces(
        |w| {
            let p = pdf_w(&fp, w);
            if p == 0.0 {
                0.0
            } else {
                max_message_size(gain * w, sp.n, q) * p
            }
        },
        &points,
        Some(scale),
    )?;
    Ok(rt.k0 as f64 * product_cdf(&fp, ts.threshold) + upper)
}

/// Finite-blocklength fCSI outcome for a solved threshold.
pub fn fcsi_fbl(sp: &SystemParams, rt: &ReliabilityTarget, ts: &ThresholdSolution) -> Result<SchemeOutcome> {
    Ok(SchemeOutcome {
        feasible: true,
        k_bits: rt.k0 as f64,
        kbar: fcsi_kbar(sp, rt, ts)?,
        p_k0: product_cdf(&sp.fading, ts.threshold),
    })
}

/// W below which even k₀ bits are in outage, (2^{k₀/n} − 1)/gain.
pub fn fcsi_asymptotic_threshold(sp: &SystemParams, rt: &ReliabilityTarget) -> f64 {
    (rt.k0 as f64 / sp.n as f64 * LN_2).exp_m1() / sp.snr_gain()
}

/// Asymptotic message size at W = w: n·C(γ(w)), never below k₀.
pub fn fcsi_k_asymptotic(w: f64, sp: &SystemParams, rt: &ReliabilityTarget) -> f64 {
    (sp.n as f64 * capacity(sp.snr_gain() * w)).max(rt.k0 as f64)
}

/// k̄ = k₀·F_W(w_t) + ∫_{w_t}^∞ n·C(γ(w)) f_W dw.
pub fn fcsi_kbar_asymptotic(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<f64> {
    let fp = sp.fading;
    let gain = sp.snr_gain();
    let n = sp.n as f64;
    let w_t = fcsi_asymptotic_threshold(sp, rt);
    let (points, scale) = upper_points(w_t);
    let upper = KBAR_QUAD.integrate_pieces(
        |w| {
            let p = pdf_w(&fp, w);
            if p == 0.0 {
                0.0
            } else {
                n * capacity(gain * w) * p
            }
        },
        &points,
        Some(scale),
    )?;
    Ok(rt.k0 as f64 * product_cdf(&fp, w_t) + upper)
}

/// Asymptotic fCSI: feasible iff the outage at k₀ is within ε_th.
pub fn fcsi_asymptotic(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<SchemeOutcome> {
    sp.validate()?;
    rt.validate()?;
    let p_k0 = product_cdf(&sp.fading, fcsi_asymptotic_threshold(sp, rt));
    if p_k0 > rt.eps_th {
        return Ok(SchemeOutcome::infeasible());
    }
    Ok(SchemeOutcome {
        feasible: true,
        k_bits: rt.k0 as f64,
        kbar: fcsi_kbar_asymptotic(sp, rt)?,
        p_k0,
    })
}
