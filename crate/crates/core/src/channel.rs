//! Fading and link-budget model.
//!
//! The WET channel power gain is h ~ Γ(m₁, 1/m₁). The M-branch MRC sum of the
//! WIT gains, normalized by M, is ḡ ~ Γ(m₂M, 1/(m₂M)). The SNR at the
//! destination depends on the product W = h·ḡ only.

use crate::quad::Quadrature;
use crate::roots::newton_bracketed;
use crate::specfun::{gamma_lower_reg, gamma_upper_reg, lambert_w0, ln_bessel_k, ln_gamma_unchecked};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Nakagami shape parameters of both hops and the receive antenna count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub m1: f64,
    pub m2: f64,
    pub antennas: u32,
}

impl FadingParams {
    pub fn new(m1: f64, m2: f64, antennas: u32) -> Result<Self> {
        let fp = FadingParams { m1, m2, antennas };
        fp.validate()?;
        Ok(fp)
    }

    pub fn rayleigh(antennas: u32) -> Result<Self> {
        Self::new(1.0, 1.0, antennas)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m1 >= 0.5 && self.m1.is_finite()) {
            return Err(Error::param("m1", format!("{} is not >= 0.5", self.m1)));
        }
        if !(self.m2 >= 0.5 && self.m2.is_finite()) {
            return Err(Error::param("m2", format!("{} is not >= 0.5", self.m2)));
        }
        if self.antennas == 0 {
            return Err(Error::param("antennas", "need at least one receive antenna"));
        }
        Ok(())
    }

    /// Shape of ḡ, m₂M.
    pub fn shape_g(&self) -> f64 {
        self.m2 * self.antennas as f64
    }

    pub fn is_rayleigh(&self) -> bool {
        self.m1 == 1.0 && self.m2 == 1.0
    }

    /// m₁·m₂M, the rate parameter of the product.
    fn c(&self) -> f64 {
        self.m1 * self.shape_g()
    }

    pub fn cdf_h(&self, h: f64) -> f64 {
        gamma_cdf(self.m1, h)
    }

    pub fn sf_h(&self, h: f64) -> f64 {
        gamma_sf(self.m1, h)
    }

    pub fn pdf_h(&self, h: f64) -> f64 {
        gamma_pdf(self.m1, h)
    }

    pub fn cdf_gbar(&self, g: f64) -> f64 {
        gamma_cdf(self.shape_g(), g)
    }

    pub fn sf_gbar(&self, g: f64) -> f64 {
        gamma_sf(self.shape_g(), g)
    }

    pub fn pdf_gbar(&self, g: f64) -> f64 {
        gamma_pdf(self.shape_g(), g)
    }
}

/// CDF of the unit-mean gamma law Γ(m, 1/m).
fn gamma_cdf(m: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lower_reg(m, m * x).unwrap_or(1.0)
}

fn gamma_sf(m: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_upper_reg(m, m * x).unwrap_or(0.0)
}

fn gamma_pdf(m: f64, x: f64) -> f64 {
    if x < 0.0 || !x.is_finite() {
        return 0.0;
    }
    if x == 0.0 {
        return if m < 1.0 {
            f64::INFINITY
        } else if m == 1.0 {
            1.0
        } else {
            0.0
        };
    }
    (m * m.ln() + (m - 1.0) * x.ln() - m * x - ln_gamma_unchecked(m)).exp()
}

/// Physical link budget of the WET and WIT hops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Energy conversion efficiency η.
    pub eta: f64,
    /// Power-beacon transmit power Pₜ in watts.
    pub p_t: f64,
    /// Path loss of the WET hop.
    pub lambda_ts: f64,
    /// Path loss of the WIT hop.
    pub lambda_sd: f64,
    /// Noise power at the destination in watts.
    pub sigma2_d: f64,
    /// Symbol duration in seconds.
    pub t_c: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::param("eta", format!("{} is not in (0, 1)", self.eta)));
        }
        let positive = [
            ("p_t", self.p_t),
            ("lambda_ts", self.lambda_ts),
            ("lambda_sd", self.lambda_sd),
            ("sigma2_d", self.sigma2_d),
            ("t_c", self.t_c),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::param(field, format!("{value} is not > 0")));
            }
        }
        Ok(())
    }
}

/// Normalized average SNR ψ = ηPₜ/(λ_ts·λ_sd·σ_d²).
pub fn psi_from_link_budget(lb: &LinkBudget) -> f64 {
    lb.eta * lb.p_t / (lb.lambda_ts * lb.lambda_sd * lb.sigma2_d)
}

/// Energy harvested over v channel uses at WET gain h, in joules.
pub fn harvested_energy(lb: &LinkBudget, h: f64, v: u32) -> f64 {
    lb.eta * lb.p_t * h / lb.lambda_ts * v as f64 * lb.t_c
}

/// Transmit power when the harvested energy is spread over n channel uses.
pub fn transmit_power(lb: &LinkBudget, h: f64, v: u32, n: u32) -> f64 {
    v as f64 / n as f64 * lb.eta * lb.p_t * h / lb.lambda_ts
}

/// Everything the rate-control schemes need about the physical system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub fading: FadingParams,
    /// Normalized SNR ψ, linear scale.
    pub psi: f64,
    /// WET channel uses.
    pub v: u32,
    /// WIT channel uses.
    pub n: u32,
}

impl SystemParams {
    pub fn new(fading: FadingParams, psi: f64, v: u32, n: u32) -> Result<Self> {
        let sp = SystemParams { fading, psi, v, n };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        self.fading.validate()?;
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return Err(Error::param("psi", format!("{} is not > 0", self.psi)));
        }
        if self.v == 0 {
            return Err(Error::param("v", "need at least one WET channel use"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "need at least one WIT channel use"));
        }
        Ok(())
    }

    /// Delay budget δ = v + n.
    pub fn delta(&self) -> u32 {
        self.v + self.n
    }

    /// SNR per unit of W: γ = snr_gain·w.
    pub fn snr_gain(&self) -> f64 {
        self.v as f64 / self.n as f64 * self.fading.antennas as f64 * self.psi
    }
}

/// γ = (v/n)·M·ψ·w.
pub fn snr_from_w(sp: &SystemParams, w: f64) -> f64 {
    sp.snr_gain() * w
}

/// PDF of W = h·ḡ.
pub fn product_pdf(fp: &FadingParams, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::domain("product_pdf", format!("w = {w}, need w > 0")));
    }
    if w == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(ln_product_pdf(fp, w).exp())
}

fn ln_product_pdf(fp: &FadingParams, w: f64) -> f64 {
    let mg = fp.shape_g();
    let a = mg + fp.m1;
    let c = fp.c();
    std::f64::consts::LN_2
        + 0.5 * a * c.ln()
        + (0.5 * a - 1.0) * w.ln()
        + ln_bessel_k(mg - fp.m1, 2.0 * (c * w).sqrt()).unwrap_or(f64::NEG_INFINITY)
        - ln_gamma_unchecked(mg)
        - ln_gamma_unchecked(fp.m1)
}

const CDF_QUAD: Quadrature = Quadrature {
    abs_tol: 1e-300,
    rel_tol: 1e-13,
    max_segments: 4000,
};

/// CDF of W. Rayleigh fading uses the closed form; every other shape pair
/// goes through [`product_cdf_quadrature`].
pub fn product_cdf(fp: &FadingParams, w: f64) -> f64 {
    product_split(fp, w).0
}

/// Survival function 1 − F_W(w), accurate in the upper tail.
pub fn product_sf(fp: &FadingParams, w: f64) -> f64 {
    product_split(fp, w).1
}

/// (F_W(w), 1 − F_W(w)), each computed directly on its small side.
fn product_split(fp: &FadingParams, w: f64) -> (f64, f64) {
    if w <= 0.0 {
        return (0.0, 1.0);
    }
    if w == f64::INFINITY {
        return (1.0, 0.0);
    }
    if fp.is_rayleigh() {
        if let Some(tail) = rayleigh_tail(fp.antennas, w) {
            return (1.0 - tail, tail);
        }
    }
    let kernel = BesselKernel::new(fp, w);
    let result = kernel.lower().and_then(|lower| {
        if lower <= 0.5 {
            Ok((lower, 1.0 - lower))
        } else {
            kernel.upper().map(|upper| (1.0 - upper, upper))
        }
    });
    result.unwrap_or_else(|e| {
        log::warn!("product CDF quadrature fallback at w = {w}: {e}");
        let f = conditional_cdf(fp, w);
        (f, 1.0 - f)
    })
}

/// 2(Mw)^{M/2} K_M(2√(Mw)) / (M−1)!, the Rayleigh survival function. None
/// for tiny w where 1 minus it would cancel catastrophically.
fn rayleigh_tail(antennas: u32, w: f64) -> Option<f64> {
    let m = antennas as f64;
    let z = 2.0 * (m * w).sqrt();
    let ln_tail = std::f64::consts::LN_2 + 0.5 * m * (m * w).ln() + ln_bessel_k(m, z).ok()? - ln_gamma_unchecked(m);
    let tail = ln_tail.exp().clamp(0.0, 1.0);
    if tail > 1.0 - 1e-6 {
        return None;
    }
    Some(tail)
}

/// The CDF integrand 4(cw)^{a/2}/(Γ(m₂M)Γ(m₁)) · x^{a−1} K_ν(2√(cw)·x).
/// Its integral over [0, ∞) is exactly one.
struct BesselKernel {
    a: f64,
    nu: f64,
    z: f64,
    ln_pref: f64,
}

impl BesselKernel {
    fn new(fp: &FadingParams, w: f64) -> Self {
        let mg = fp.shape_g();
        let c = fp.c();
        let a = mg + fp.m1;
        BesselKernel {
            a,
            nu: mg - fp.m1,
            z: 2.0 * (c * w).sqrt(),
            ln_pref: 2.0 * std::f64::consts::LN_2 + 0.5 * a * (c * w).ln()
                - ln_gamma_unchecked(mg)
                - ln_gamma_unchecked(fp.m1),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match ln_bessel_k(self.nu, self.z * x) {
            Ok(lk) => (self.ln_pref + (self.a - 1.0) * x.ln() + lk).exp(),
            Err(_) => 0.0,
        }
    }

    /// x-location of the integrand's bulk, roughly where z·x ≈ a.
    fn peak(&self) -> f64 {
        self.a / self.z
    }

    fn lower(&self) -> Result<f64> {
        let f = |x| self.eval(x);
        let peak = self.peak();
        let v = if peak < 0.5 {
            CDF_QUAD.integrate_pieces(f, &[0.0, peak, 1.0], None)?
        } else {
            CDF_QUAD.integrate(f, 0.0, 1.0)?
        };
        Ok(v.clamp(0.0, 1.0))
    }

    fn upper(&self) -> Result<f64> {
        let f = |x| self.eval(x);
        let peak = self.peak();
        let v = if peak > 1.5 {
            CDF_QUAD.integrate_pieces(f, &[1.0, peak], Some(peak))?
        } else {
            // beyond x = 1 the integrand decays like e^{-z·x}
            CDF_QUAD.integrate_to_infinity(f, 1.0, (1.0 / self.z).clamp(1e-6, 1.0))?
        };
        Ok(v.clamp(0.0, 1.0))
    }
}

/// CDF of W from the Bessel-kernel integral over x ∈ [0, 1], valid for every
/// shape pair. Loses relative accuracy as F_W → 1; [`product_sf`] does not.
pub fn product_cdf_quadrature(fp: &FadingParams, w: f64) -> Result<f64> {
    if w <= 0.0 {
        return Ok(0.0);
    }
    BesselKernel::new(fp, w).lower()
}

/// F_W(w) = E_ḡ[P(m₁, m₁w/ḡ)], used only when the Bessel-kernel integral fails.
fn conditional_cdf(fp: &FadingParams, w: f64) -> f64 {
    let mg = fp.shape_g();
    CDF_QUAD
        .integrate_to_infinity(|g| fp.cdf_h(w / g) * gamma_pdf(mg, g), 0.0, 1.0)
        .unwrap_or(f64::NAN)
        .clamp(0.0, 1.0)
}

fn check_tail_support(fp: &FadingParams) -> Result<()> {
    if fp.shape_g() == fp.m1 {
        return Err(Error::Unsupported(format!(
            "no tail approximation when m2·M = m1 (= {})",
            fp.m1
        )));
    }
    Ok(())
}

/// ln of Γ(|m₂M−m₁|) / (Γ(m₂M)Γ(m₁)·min(m₂M, m₁)).
fn ln_tail_coefficient(fp: &FadingParams) -> f64 {
    let mg = fp.shape_g();
    let lo = mg.min(fp.m1);
    ln_gamma_unchecked((mg - fp.m1).abs()) - ln_gamma_unchecked(mg) - ln_gamma_unchecked(fp.m1) - lo.ln()
}

/// Left-tail power law of F_W without the exponential correction.
pub fn product_cdf_tail_power(fp: &FadingParams, w: f64) -> Result<f64> {
    check_tail_support(fp)?;
    if !(w > 0.0) {
        return Err(Error::domain("product_cdf_tail_power", format!("w = {w}")));
    }
    let lo = fp.shape_g().min(fp.m1);
    Ok((ln_tail_coefficient(fp) + lo * (fp.c() * w).ln()).exp())
}

/// Left-tail approximation of F_W including the factor e^{−min(m₂M, m₁)·w}.
pub fn product_cdf_tail_approx(fp: &FadingParams, w: f64) -> Result<f64> {
    check_tail_support(fp)?;
    if !(w > 0.0) {
        return Err(Error::domain("product_cdf_tail_approx", format!("w = {w}")));
    }
    let lo = fp.shape_g().min(fp.m1);
    Ok((ln_tail_coefficient(fp) + lo * (fp.c() * w).ln() - lo * w).exp())
}

/// Closed-form inverse of [`product_cdf_tail_approx`] through the Lambert W function.
pub fn product_cdf_inv_approx(fp: &FadingParams, eps: f64) -> Result<f64> {
    check_tail_support(fp)?;
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::domain(
            "product_cdf_inv_approx",
            format!("eps = {eps}, need 0 < eps <= 0.1"),
        ));
    }
    let lo = fp.shape_g().min(fp.m1);
    let arg = -((eps.ln() - ln_tail_coefficient(fp)) / lo).exp() / fp.c();
    if arg < -(-1.0f64).exp() {
        return Err(Error::Infeasible(format!(
            "tail approximation has no inverse at eps = {eps} (Lambert argument {arg:.4} < -1/e)"
        )));
    }
    Ok(-lambert_w0(arg)?)
}

/// Exact inverse of F_W by safeguarded Newton in log-log coordinates.
pub fn product_cdf_inv_numeric(fp: &FadingParams, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(
            "product_cdf_inv_numeric",
            format!("eps = {eps}, need 0 < eps < 1"),
        ));
    }
    let (u_lo, u_hi) = (1e-30f64.ln(), 1e6f64.ln());
    let target = eps.ln();
    // u = ln w, r(u) = ln F(e^u) − ln ε, r'(u) = w f(w) / F(w)
    let fdf = |u: f64| {
        let w = u.exp();
        let cdf = product_cdf(fp, w);
        if cdf <= 0.0 {
            return (-1e300, 0.0);
        }
        let slope = w * product_pdf(fp, w).unwrap_or(0.0) / cdf;
        (cdf.ln() - target, slope)
    };
    let start = match product_cdf_inv_approx(fp, eps.min(0.1)) {
        Ok(w) if w > 0.0 => w.ln(),
        _ => 0.0,
    };
    let root = newton_bracketed(fdf, u_lo, u_hi, start, 1e-14, 0.0, 200)
        .map_err(|e| Error::convergence("product_cdf_inv_numeric", format!("eps = {eps}: {e}")))?;
    Ok(root.x.exp())
}

/// Draws h ~ Γ(m₁, 1/m₁).
pub fn sample_h<R: Rng + ?Sized>(fp: &FadingParams, rng: &mut R) -> f64 {
    unit_gamma(fp.m1).sample(rng)
}

/// Draws ḡ ~ Γ(m₂M, 1/(m₂M)).
pub fn sample_gbar<R: Rng + ?Sized>(fp: &FadingParams, rng: &mut R) -> f64 {
    unit_gamma(fp.shape_g()).sample(rng)
}

/// Draws W = h·ḡ from independent draws of both factors.
pub fn sample_w<R: Rng + ?Sized>(fp: &FadingParams, rng: &mut R) -> f64 {
    sample_h(fp, rng) * sample_gbar(fp, rng)
}

pub(crate) fn unit_gamma(shape: f64) -> Gamma<f64> {
    Gamma::new(shape, 1.0 / shape).expect("validated shape is positive and finite")
}
