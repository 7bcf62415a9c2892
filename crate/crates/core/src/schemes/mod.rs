//! Rate-control schemes: fixed transmit rate (FTR), rate from the known state
//! of charge (KSC), and rate from full CSI (fCSI). Each comes in an asymptotic
//! form (outage model) and a finite-blocklength form (normal approximation).

mod fcsi;
mod ftr;
mod ksc;

pub use fcsi::{
    fcsi_asymptotic, fcsi_asymptotic_threshold, fcsi_fbl, fcsi_k, fcsi_k_asymptotic, fcsi_kbar, fcsi_kbar_asymptotic,
    fcsi_lhs, fcsi_threshold,
};
pub use ftr::{
    ftr_chi, ftr_k_asymptotic, ftr_k_fbl, ftr_n_star_ratio, ftr_optimal_blocklengths, ftr_rate_from_chi, inverse_cdf,
};
pub use ksc::{
    ksc_asymptotic, ksc_fbl, ksc_fbl_k_direct, ksc_fbl_outcome, ksc_fbl_z, ksc_initial_guess, ksc_k, ksc_kappa,
    ksc_kbar_asymptotic, ksc_kbar_integral, ksc_kbar_rayleigh, ksc_outage_given_h, ksc_threshold_asymptotic, ksc_z,
    ksc_z_derivative, KscFbl,
};

use crate::channel::SystemParams;
use crate::fbl::{awgn_error, capacity};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Reliability constraint: average error at most `eps_th`, every message at least `k0` bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityTarget {
    pub eps_th: f64,
    pub k0: u32,
}

impl ReliabilityTarget {
    pub fn new(eps_th: f64, k0: u32) -> Result<Self> {
        let rt = ReliabilityTarget { eps_th, k0 };
        rt.validate()?;
        Ok(rt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_th > 0.0 && self.eps_th <= 0.1) {
            return Err(Error::param("eps_th", format!("{} is not in (0, 0.1]", self.eps_th)));
        }
        if self.k0 == 0 {
            return Err(Error::param("k0", "must be at least 1 bit"));
        }
        Ok(())
    }
}

/// Channel threshold (h₀ or w₀) and the per-round error target above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSolution {
    pub threshold: f64,
    pub eps_star: f64,
    pub iterations: usize,
    /// Left side minus ε_th of the threshold equation at `threshold`.
    pub residual: f64,
}

/// Result of running one scheme on one configuration.
///
/// `k_bits` is the fixed message size for FTR and the minimum size k₀ for
/// the adaptive schemes; it is 0 when the configuration is infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOutcome {
    pub feasible: bool,
    pub k_bits: f64,
    pub kbar: f64,
    pub p_k0: f64,
}

impl SchemeOutcome {
    pub fn infeasible() -> Self {
        SchemeOutcome {
            feasible: false,
            k_bits: 0.0,
            kbar: 0.0,
            p_k0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Ftr,
    Ksc,
    Fcsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Form {
    Asymptotic,
    Fbl,
}

/// Source of F_W⁻¹(ε_th) for the FTR rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseMethod {
    /// Lambert-W closed form, falling back to the numeric inverse where it does not apply.
    #[default]
    ClosedForm,
    Numeric,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ftr, Scheme::Ksc, Scheme::Fcsi];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Ftr => "ftr",
            Scheme::Ksc => "ksc",
            Scheme::Fcsi => "fcsi",
        }
    }
}

impl Form {
    pub fn name(&self) -> &'static str {
        match self {
            Form::Asymptotic => "asymptotic",
            Form::Fbl => "fbl",
        }
    }
}

impl InverseMethod {
    pub fn name(&self) -> &'static str {
        match self {
            InverseMethod::ClosedForm => "closed_form",
            InverseMethod::Numeric => "numeric",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ftr" => Ok(Scheme::Ftr),
            "ksc" => Ok(Scheme::Ksc),
            "fcsi" => Ok(Scheme::Fcsi),
            other => Err(format!("unknown scheme `{other}` (expected ftr, ksc or fcsi)")),
        }
    }
}

impl FromStr for Form {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "asymptotic" | "asym" => Ok(Form::Asymptotic),
            "fbl" | "finite_blocklength" => Ok(Form::Fbl),
            other => Err(format!("unknown form `{other}` (expected asymptotic or fbl)")),
        }
    }
}

impl FromStr for InverseMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "closed_form" | "approx" => Ok(InverseMethod::ClosedForm),
            "numeric" | "exact" => Ok(InverseMethod::Numeric),
            other => Err(format!("unknown inverse `{other}` (expected closed_form or numeric)")),
        }
    }
}

/// Per-round message size as a function of the channel realization, with
/// all thresholds frozen.
#[derive(Debug, Clone, PartialEq)]
pub enum RateRule {
    Fixed {
        k: f64,
    },
    KscAsymptotic {
        h0: f64,
        k0: f64,
        n: u32,
    },
    KscFbl(KscFbl),
    FcsiAsymptotic {
        w_t: f64,
        k0: f64,
        n: u32,
        gain: f64,
    },
    FcsiFbl {
        w0: f64,
        k0: f64,
        n: u32,
        gain: f64,
        q_inv: f64,
    },
}

impl RateRule {
    /// Message size for WET gain h and normalized WIT gain ḡ.
    pub fn k(&self, sp: &SystemParams, h: f64, gbar: f64) -> Result<f64> {
        Ok(match self {
            RateRule::Fixed { k } => *k,
            RateRule::KscAsymptotic { h0, k0, n } => ksc_k_raw(h, *h0, *k0, *n),
            RateRule::KscFbl(sol) => sol.k(sp, h)? as f64,
            RateRule::FcsiAsymptotic { w_t, k0, n, gain } => {
                let w = h * gbar;
                if w <= *w_t {
                    *k0
                } else {
                    *n as f64 * capacity(gain * w)
                }
            }
            RateRule::FcsiFbl { w0, k0, n, gain, q_inv } => {
                let w = h * gbar;
                if w <= *w0 {
                    *k0
                } else {
                    crate::fbl::max_message_size(gain * w, *n, *q_inv)
                }
            }
        })
    }
}

pub(crate) fn ksc_k_raw(h: f64, h0: f64, k0: f64, n: u32) -> f64 {
    if h <= h0 {
        return k0;
    }
    let n = n as f64;
    let c = (k0 / n * std::f64::consts::LN_2).exp_m1();
    n * (c * h / h0).ln_1p() / std::f64::consts::LN_2
}

/// Everything needed to report and simulate one scheme on one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub scheme: Scheme,
    pub form: Form,
    pub outcome: SchemeOutcome,
    pub threshold: Option<ThresholdSolution>,
    /// None when the configuration is infeasible.
    pub rule: Option<RateRule>,
}

impl Evaluation {
    /// Probability of a block error at SNR γ with message size k, under this form's error model.
    pub fn error_probability(&self, gamma: f64, k: f64, n: u32) -> f64 {
        match self.form {
            Form::Asymptotic => {
                // a rate set to n·C(γ) itself must decode despite rounding
                if k - n as f64 * capacity(gamma) > 1e-12 * k {
                    1.0
                } else {
                    0.0
                }
            }
            Form::Fbl => awgn_error(gamma, &crate::fbl::RatePoint { k, n }),
        }
    }
}

/// Solves one scheme in one form and freezes its rate rule.
pub fn evaluate(
    sp: &SystemParams,
    rt: &ReliabilityTarget,
    scheme: Scheme,
    form: Form,
    inverse: InverseMethod,
) -> Result<Evaluation> {
    sp.validate()?;
    rt.validate()?;
    let k0 = rt.k0 as f64;
    let n = sp.n;
    let gain = sp.snr_gain();
    let (outcome, threshold, rule) = match (scheme, form) {
        (Scheme::Ftr, Form::Asymptotic) => {
            let o = ftr_k_asymptotic(sp, rt, inverse)?;
            (o, None, Some(RateRule::Fixed { k: o.k_bits }))
        }
        (Scheme::Ftr, Form::Fbl) => {
            let o = ftr_k_fbl(sp, rt, inverse)?;
            (o, None, Some(RateRule::Fixed { k: o.k_bits }))
        }
        (Scheme::Ksc, Form::Asymptotic) => match ksc_threshold_asymptotic(sp, rt) {
            Ok(ts) => {
                let o = ksc_asymptotic(sp, rt)?;
                let rule = RateRule::KscAsymptotic {
                    h0: ts.threshold,
                    k0,
                    n,
                };
                (o, Some(ts), Some(rule))
            }
            Err(Error::Infeasible(_)) => (SchemeOutcome::infeasible(), None, None),
            Err(e) => return Err(e),
        },
        (Scheme::Ksc, Form::Fbl) => match ksc_fbl(sp, rt) {
            Ok(sol) => {
                let o = sol.outcome(sp, rt);
                (o, Some(sol.threshold), Some(RateRule::KscFbl(sol)))
            }
            Err(Error::Infeasible(_)) => (SchemeOutcome::infeasible(), None, None),
            Err(e) => return Err(e),
        },
        (Scheme::Fcsi, Form::Asymptotic) => {
            let o = fcsi_asymptotic(sp, rt)?;
            let rule = o.feasible.then(|| RateRule::FcsiAsymptotic {
                w_t: fcsi_asymptotic_threshold(sp, rt),
                k0,
                n,
                gain,
            });
            (o, None, rule)
        }
        (Scheme::Fcsi, Form::Fbl) => match fcsi_threshold(sp, rt) {
            Ok(ts) => {
                let o = fcsi_fbl(sp, rt, &ts)?;
                let q_inv = crate::specfun::gauss_q_inv(ts.eps_star)?;
                let rule = RateRule::FcsiFbl {
                    w0: ts.threshold,
                    k0,
                    n,
                    gain,
                    q_inv,
                };
                (o, Some(ts), Some(rule))
            }
            Err(Error::Infeasible(_)) => (SchemeOutcome::infeasible(), None, None),
            Err(e) => return Err(e),
        },
    };
    let rule = if outcome.feasible { rule } else { None };
    Ok(Evaluation {
        scheme,
        form,
        outcome,
        threshold,
        rule,
    })
}

/// Largest integer k ≥ `floor` with `ok(k)`, for a predicate that holds up to
/// some point and fails beyond it. `start` is a hint. None when `ok(floor)` fails.
pub(crate) fn max_satisfying<F>(floor: u64, start: u64, mut ok: F) -> Result<Option<u64>>
where
    F: FnMut(u64) -> Result<bool>,
{
    if !ok(floor)? {
        return Ok(None);
    }
    let start = start.max(floor);
    let (mut lo, mut hi) = if start == floor || ok(start)? {
        // gallop upward until the predicate fails
        let mut lo = start;
        let mut step = 1u64;
        loop {
            let probe = lo + step;
            if probe > u32::MAX as u64 {
                return Err(Error::convergence("max_satisfying", "predicate never fails"));
            }
            if ok(probe)? {
                lo = probe;
                step *= 2;
            } else {
                break (lo, probe);
            }
        }
    } else {
        (floor, start)
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
