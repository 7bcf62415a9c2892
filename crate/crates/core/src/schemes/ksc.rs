use super::{ksc_k_raw, max_satisfying, ReliabilityTarget, SchemeOutcome, ThresholdSolution};
use crate::channel::SystemParams;
use crate::fbl::{asymptotic_outage, avg_error_fading, avg_error_given_h, RatePoint, ERROR_QUAD};
use crate::quad::Quadrature;
use crate::roots::brent;
use crate::specfun::{exp_integral_e1_scaled, ln_gamma_unchecked};
use crate::{Error, Result};
use std::f64::consts::LN_2;

const Z_QUAD: Quadrature = Quadrature {
    abs_tol: 1e-16,
    rel_tol: 1e-13,
    max_segments: 2000,
};

const ZFBL_QUAD: Quadrature = Quadrature {
    abs_tol: 1e-14,
    rel_tol: 1e-10,
    max_segments: 2000,
};

const KBAR_QUAD: Quadrature = Quadrature {
    abs_tol: 1e-12,
    rel_tol: 1e-12,
    max_segments: 2000,
};

const MAX_NEWTON: usize = 200;
/// Algorithm stops once 100·|Δh|/h ≤ this (a percentage).
const STEP_PERCENT: f64 = 1e-6;

/// κ = (2^{k₀/n} − 1)·n/(ψ·v).
pub fn ksc_kappa(sp: &SystemParams, k0: u32) -> f64 {
    let n = sp.n as f64;
    (k0 as f64 / n * LN_2).exp_m1() * n / (sp.psi * sp.v as f64)
}

/// Outage given the WET gain, ε̄(k₀,n,h) = F_Ḡ(κ/(M·h)).
pub fn ksc_outage_given_h(sp: &SystemParams, k0: u32, h: f64) -> f64 {
    if h <= 0.0 {
        return 1.0;
    }
    let fp = &sp.fading;
    fp.cdf_gbar(ksc_kappa(sp, k0) / (fp.antennas as f64 * h))
}

/// Points inside (0, h0) where the conditional error falls fastest, plus the ends.
fn z_points(hc: f64, h0: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    pts.extend([0.5 * hc, hc, 2.0 * hc].into_iter().filter(|&p| p > 0.0 && p < h0));
    pts.push(h0);
    pts
}

/// ∫₀^{h0} e(h) f_H(h) dh + e(h0)·(1 − F_H(h0)) for a conditional error e.
fn compensated<E: Fn(f64) -> f64>(sp: &SystemParams, h0: f64, hc: f64, quad: &Quadrature, err: E) -> Result<f64> {
    let fp = sp.fading;
    if h0 <= 0.0 {
        return Ok(err(0.0));
    }
    let z1 = quad.integrate_pieces(|h| err(h) * fp.pdf_h(h), &z_points(hc, h0), None)?;
    Ok(z1 + err(h0) * fp.sf_h(h0))
}

/// z(h₀), the average error of the asymptotic KSC rule with threshold h₀.
pub fn ksc_z(sp: &SystemParams, k0: u32, h0: f64) -> Result<f64> {
    let hc = ksc_kappa(sp, k0) / sp.fading.antennas as f64;
    compensated(sp, h0, hc, &Z_QUAD, |h| ksc_outage_given_h(sp, k0, h))
}

/// dz/dh₀ = −(1 − F_H(h₀))·(κm₂)^s·h₀^{−s−1}·e^{−κm₂/h₀}/Γ(s), with s = m₂M.
pub fn ksc_z_derivative(sp: &SystemParams, k0: u32, h0: f64) -> f64 {
    if h0 <= 0.0 {
        return 0.0;
    }
    let fp = &sp.fading;
    let s = fp.shape_g();
    let b = ksc_kappa(sp, k0) * fp.m2;
    let ln_mag = s * b.ln() - (s + 1.0) * h0.ln() - b / h0 - ln_gamma_unchecked(s);
    -fp.sf_h(h0) * ln_mag.exp()
}

/// z''/z' from the log-derivative of the closed-form z'.
fn z_curvature_ratio(sp: &SystemParams, k0: u32, h0: f64) -> f64 {
    let fp = &sp.fading;
    let s = fp.shape_g();
    let b = ksc_kappa(sp, k0) * fp.m2;
    let hazard = fp.pdf_h(h0) / fp.sf_h(h0);
    -hazard - (s + 1.0) / h0 + b / (h0 * h0)
}

/// Starting point ρ for the threshold iteration.
pub fn ksc_initial_guess(sp: &SystemParams, k0: u32) -> f64 {
    let fp = &sp.fading;
    let km2 = ksc_kappa(sp, k0) * fp.m2;
    let s = fp.shape_g();
    if fp.m1 > 1.0 {
        km2 / (1.0 + s)
    } else {
        let half = 0.5 * (s + 1.0);
        (half * half + km2).sqrt() - half
    }
}

fn check_feasible_asymptotic(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<()> {
    let outage = asymptotic_outage(sp, &RatePoint::new(rt.k0 as f64, sp.n)?);
    if outage > rt.eps_th {
        return Err(Error::Infeasible(format!(
            "outage at k0 = {} is {outage:e} > {:e}",
            rt.k0, rt.eps_th
        )));
    }
    Ok(())
}

/// Threshold h₀ with z(h₀) = ε_th. Newton on z with the closed-form
/// derivative; when the iterate has crossed the root and the curvature test
/// μ = |z̃·z̃''/z̃'²| ≥ 1 fails, the step is the midpoint with the previous iterate.
pub fn ksc_threshold_asymptotic(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<ThresholdSolution> {
    sp.validate()?;
    rt.validate()?;
    check_feasible_asymptotic(sp, rt)?;
    let k0 = rt.k0;
    let target = rt.eps_th;
    let zt = |h: f64| ksc_z(sp, k0, h).map(|z| z - target);

    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut h_prev = 0.0;
    let mut z_prev = 1.0 - target;
    let mut h = ksc_initial_guess(sp, k0);
    let mut trace = Vec::new();
    for it in 1..=MAX_NEWTON {
        let z = zt(h)?;
        trace.push((h, z));
        if z == 0.0 {
            return Ok(solution(sp, k0, h, z, it));
        }
        if z > 0.0 {
            lo = lo.max(h);
        } else {
            hi = hi.min(h);
        }
        let dz = ksc_z_derivative(sp, k0, h);
        let newton = h - z / dz;
        let mut next = if z * z_prev > 0.0 {
            newton
        } else {
            let mu = (z * z_curvature_ratio(sp, k0, h) / dz).abs();
            if mu < 1.0 {
                newton
            } else {
                0.5 * (h + h_prev)
            }
        };
        if !(next.is_finite() && next > lo && next < hi) {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * h };
        }
        h_prev = h;
        z_prev = z;
        h = next;
        if 100.0 * (h - h_prev).abs() / h_prev <= STEP_PERCENT {
            let residual = zt(h)?;
            return Ok(solution(sp, k0, h, residual, it));
        }
    }
    Err(Error::convergence(
        "ksc_threshold_asymptotic",
        format!(
            "no convergence in {MAX_NEWTON} steps; last (h, z~): {:?}",
            &trace[trace.len().saturating_sub(5)..]
        ),
    ))
}

fn solution(sp: &SystemParams, k0: u32, h: f64, residual: f64, iterations: usize) -> ThresholdSolution {
    ThresholdSolution {
        threshold: h,
        eps_star: ksc_outage_given_h(sp, k0, h),
        iterations,
        residual,
    }
}

/// Message size for WET gain h under the asymptotic rule.
pub fn ksc_k(h: f64, h0: f64, rt: &ReliabilityTarget, n: u32) -> f64 {
    ksc_k_raw(h, h0, rt.k0 as f64, n)
}

/// Average message size of the asymptotic rule by quadrature, with the
/// substitution x = c·(h/h₀ − 1), c = 2^{k₀/n} − 1.
pub fn ksc_kbar_integral(sp: &SystemParams, k0: u32, h0: f64) -> Result<f64> {
    let fp = &sp.fading;
    let m1 = fp.m1;
    let n = sp.n as f64;
    let k0f = k0 as f64;
    let c = (k0f / n * LN_2).exp_m1();
    let base = 1.0 + c;
    let ln_pref = m1 * m1.ln() + n.ln() - m1 * h0 + m1 * h0.ln() - LN_2.ln() - m1 * c.ln() - ln_gamma_unchecked(m1);
    let tail = KBAR_QUAD.integrate_to_infinity(
        |x| (ln_pref + (m1 - 1.0) * (x + c).ln() - m1 * h0 * x / c).exp() * (base + x).ln(),
        0.0,
        c / h0,
    )?;
    Ok(k0f * fp.cdf_h(h0) + tail)
}

/// Closed form for m₁ = 1: k₀ + (n/ln 2)·e^{−h₀}·e^{x}E₁(x), x = h₀(1 + 1/c).
pub fn ksc_kbar_rayleigh(sp: &SystemParams, k0: u32, h0: f64) -> Result<f64> {
    if sp.fading.m1 != 1.0 {
        return Err(Error::Unsupported(format!(
            "closed form needs m1 = 1, got {}",
            sp.fading.m1
        )));
    }
    let n = sp.n as f64;
    let c = (k0 as f64 / n * LN_2).exp_m1();
    let x = h0 + h0 / c;
    Ok(k0 as f64 + n / LN_2 * (-h0).exp() * exp_integral_e1_scaled(x)?)
}

/// Average message size of the asymptotic rule; closed form when m₁ = 1.
pub fn ksc_kbar_asymptotic(sp: &SystemParams, rt: &ReliabilityTarget, h0: f64) -> Result<f64> {
    if sp.fading.m1 == 1.0 {
        ksc_kbar_rayleigh(sp, rt.k0, h0)
    } else {
        ksc_kbar_integral(sp, rt.k0, h0)
    }
}

/// Asymptotic KSC: threshold, average size and P[k = k₀] = F_H(h₀).
pub fn ksc_asymptotic(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<SchemeOutcome> {
    let ts = match ksc_threshold_asymptotic(sp, rt) {
        Ok(ts) => ts,
        Err(Error::Infeasible(_)) => return Ok(SchemeOutcome::infeasible()),
        Err(e) => return Err(e),
    };
    Ok(SchemeOutcome {
        feasible: true,
        k_bits: rt.k0 as f64,
        kbar: ksc_kbar_asymptotic(sp, rt, ts.threshold)?,
        p_k0: sp.fading.cdf_h(ts.threshold),
    })
}

/// Finite-blocklength KSC rule. For h above `breakpoints[j]` the message size
/// is at least k₀ + j + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct KscFbl {
    pub threshold: ThresholdSolution,
    pub k0: u32,
    pub n: u32,
    pub breakpoints: Vec<f64>,
}

/// Tail mass of H beyond the last breakpoint.
const BREAKPOINT_TAIL: f64 = 1e-13;
const MAX_BREAKPOINTS: usize = 100_000;

impl KscFbl {
    pub fn h0(&self) -> f64 {
        self.threshold.threshold
    }

    /// Largest integer k with conditional error at h no larger than ε*.
    pub fn k(&self, sp: &SystemParams, h: f64) -> Result<u32> {
        if h <= self.h0() {
            return Ok(self.k0);
        }
        let above = self.breakpoints.partition_point(|&b| b <= h);
        if above < self.breakpoints.len() {
            return Ok(self.k0 + above as u32);
        }
        ksc_fbl_k_direct(sp, self.k0, self.threshold.eps_star, self.h0(), h)
    }

    pub fn kbar(&self, sp: &SystemParams) -> f64 {
        let fp = &sp.fading;
        self.k0 as f64 + self.breakpoints.iter().map(|&b| fp.sf_h(b)).sum::<f64>()
    }

    pub fn outcome(&self, sp: &SystemParams, _rt: &ReliabilityTarget) -> SchemeOutcome {
        SchemeOutcome {
            feasible: true,
            k_bits: self.k0 as f64,
            kbar: self.kbar(sp),
            p_k0: self.p_k0(sp),
        }
    }

    /// P[k = k₀]. Integer sizes stay at k₀ up to the first breakpoint, not just up to h₀.
    pub fn p_k0(&self, sp: &SystemParams) -> f64 {
        self.breakpoints.first().map_or(1.0, |&b| sp.fading.cdf_h(b))
    }
}

fn cond_error(sp: &SystemParams, k: u32, h: f64) -> Result<f64> {
    avg_error_given_h(sp, &RatePoint::new(k as f64, sp.n)?, h, &ERROR_QUAD)
}

/// Left side of the finite-blocklength threshold equation at h₀.
pub fn ksc_fbl_z(sp: &SystemParams, k0: u32, h0: f64) -> Result<f64> {
    let hc = ksc_kappa(sp, k0) / sp.fading.antennas as f64;
    let failed = std::cell::Cell::new(None);
    let z = compensated(sp, h0, hc, &ZFBL_QUAD, |h| match cond_error(sp, k0, h) {
        Ok(e) => e,
        Err(e) => {
            failed.set(Some(e));
            f64::NAN
        }
    });
    match failed.into_inner() {
        Some(e) => Err(e),
        None => z,
    }
}

/// Direct search for the message size at h, bypassing the breakpoint table.
pub fn ksc_fbl_k_direct(sp: &SystemParams, k0: u32, eps_star: f64, h0: f64, h: f64) -> Result<u32> {
    if h <= h0 {
        return Ok(k0);
    }
    let start = ksc_k_raw(h, h0, k0 as f64, sp.n).floor() as u64;
    let k = max_satisfying(k0 as u64, start, |k| Ok(cond_error(sp, k as u32, h)? <= eps_star))?;
    // e_{k₀}(h) ≤ e_{k₀}(h₀) = ε* for h > h₀, so the floor always qualifies
    Ok(k.map_or(k0, |k| k as u32))
}

/// Finite-blocklength KSC: solves the threshold equation with the
/// normal-approximation error and tabulates where k steps up.
pub fn ksc_fbl(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<KscFbl> {
    sp.validate()?;
    rt.validate()?;
    let k0 = rt.k0;
    let avg = avg_error_fading(sp, &RatePoint::new(k0 as f64, sp.n)?)?;
    if avg > rt.eps_th {
        return Err(Error::Infeasible(format!(
            "average error at k0 = {k0} is {avg:e} > {:e}",
            rt.eps_th
        )));
    }
    let g = |h: f64| ksc_fbl_z(sp, k0, h).map(|z| z - rt.eps_th);
    // the asymptotic threshold sits below the finite-blocklength one
    let mut lo = match ksc_threshold_asymptotic(sp, rt) {
        Ok(ts) => ts.threshold,
        Err(Error::Infeasible(_)) => ksc_initial_guess(sp, k0),
        Err(e) => return Err(e),
    };
    let mut glo = g(lo)?;
    let mut tries = 0;
    while glo < 0.0 {
        lo *= 0.5;
        glo = g(lo)?;
        tries += 1;
        if tries > 200 {
            return Err(Error::convergence("ksc_fbl", "no lower bracket for h0"));
        }
    }
    let mut hi = lo * 1.25;
    let mut ghi = g(hi)?;
    while ghi > 0.0 {
        lo = hi;
        hi *= 2.0;
        ghi = g(hi)?;
        tries += 1;
        if tries > 200 {
            return Err(Error::convergence("ksc_fbl", "no upper bracket for h0"));
        }
    }
    let failed = std::cell::Cell::new(None);
    let root = brent(
        |h| match g(h) {
            Ok(v) => v,
            Err(e) => {
                failed.set(Some(e));
                f64::NAN
            }
        },
        lo,
        hi,
        1e-9 * lo,
        200,
    )?;
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let h0 = root.x;
    let eps_star = cond_error(sp, k0, h0)?;
    let threshold = ThresholdSolution {
        threshold: h0,
        eps_star,
        iterations: root.iterations,
        residual: root.residual,
    };
    let breakpoints = breakpoints(sp, k0, h0, eps_star)?;
    Ok(KscFbl {
        threshold,
        k0,
        n: sp.n,
        breakpoints,
    })
}

/// Outcome form of [`ksc_fbl`]; infeasible configurations are not errors.
pub fn ksc_fbl_outcome(sp: &SystemParams, rt: &ReliabilityTarget) -> Result<SchemeOutcome> {
    match ksc_fbl(sp, rt) {
        Ok(sol) => Ok(sol.outcome(sp, rt)),
        Err(Error::Infeasible(_)) => Ok(SchemeOutcome::infeasible()),
        Err(e) => Err(e),
    }
}

/// h_k solving e_k(h) = ε* for k = k₀+1, k₀+2, … until the tail of H is negligible.
fn breakpoints(sp: &SystemParams, k0: u32, h0: f64, eps_star: f64) -> Result<Vec<f64>> {
    let fp = sp.fading;
    let n = sp.n as f64;
    let thr = |k: u32| (k as f64 / n * LN_2).exp_m1();
    let mut out = Vec::new();
    let mut prev = h0;
    let mut k = k0;
    while fp.sf_h(prev) >= BREAKPOINT_TAIL {
        k += 1;
        if out.len() >= MAX_BREAKPOINTS {
            return Err(Error::convergence("ksc_fbl", "breakpoint table did not terminate"));
        }
        let f = |h: f64| cond_error(sp, k, h).map(|e| e - eps_star).unwrap_or(f64::NAN);
        let guess = prev * thr(k) / thr(k - 1);
        let mut hi = (guess * 1.05).max(prev * (1.0 + 1e-9));
        let mut fhi = f(hi);
        let mut lo = prev;
        while fhi > 0.0 {
            lo = hi;
            hi *= 1.5;
            fhi = f(hi);
        }
        if fhi.is_nan() {
            return Err(Error::convergence("ksc_fbl", format!("error at k = {k} not finite")));
        }
        let root = brent(f, lo, hi, 1e-12 * hi, 200)?;
        out.push(root.x);
        prev = root.x;
    }
    Ok(out)
}
