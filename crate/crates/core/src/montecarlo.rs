//! Monte Carlo simulation of full WET→WIT rounds, used as an independent check
//! on the analytical results.

use crate::channel::{product_cdf, sample_gbar, sample_h, sample_w, FadingParams, SystemParams};
use crate::roots::bisect;
use crate::schemes::{evaluate, Evaluation, Form, InverseMethod, ReliabilityTarget, Scheme};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Trials per work unit. Units are reduced in index order.
const CHUNK: u64 = 1 << 14;
/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_900_4;
/// Below this target the error rate is not estimated.
pub const MIN_VALIDATED_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub scheme: Scheme,
    pub form: Form,
    pub inverse: InverseMethod,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64, scheme: Scheme, form: Form) -> Result<Self> {
        if trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        Ok(SimConfig {
            trials,
            seed,
            scheme,
            form,
            inverse: InverseMethod::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimReport {
    pub trials: u64,
    pub errors: u64,
    /// None when ε_th is below [`MIN_VALIDATED_EPS`].
    pub error_rate: Option<f64>,
    /// 99% binomial half-width of `error_rate`.
    pub error_ci99: f64,
    pub kbar_hat: f64,
    pub kbar_se: f64,
    pub p_k0_hat: f64,
    pub p_k0_se: f64,
    pub wall_time: f64,
}

impl SimReport {
    /// Binomial standard error of the error rate under a hypothesized rate p.
    pub fn error_sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Per-trial generator: the key comes from the seed, the stream from the trial index.
fn trial_rng(base: &ChaCha8Rng, trial: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng.set_word_pos(0);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    n: u64,
    errors: u64,
    at_k0: u64,
    mean: f64,
    m2: f64,
}

impl Tally {
    fn push(&mut self, k: f64, error: bool, at_k0: bool) {
        self.n += 1;
        self.errors += error as u64;
        self.at_k0 += at_k0 as u64;
        let d = k - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (k - self.mean);
    }

    fn merge(self, other: Tally) -> Tally {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Tally {
            n,
            errors: self.errors + other.errors,
            at_k0: self.at_k0 + other.at_k0,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// Solves the scheme once, then simulates `cfg.trials` rounds with it.
pub fn simulate(sp: &SystemParams, rt: &ReliabilityTarget, cfg: &SimConfig) -> Result<SimReport> {
    let eval = evaluate(sp, rt, cfg.scheme, cfg.form, cfg.inverse)?;
    simulate_evaluation(sp, rt, &eval, cfg.trials, cfg.seed)
}

/// Simulates rounds under an already solved scheme.
pub fn simulate_evaluation(
    sp: &SystemParams,
    rt: &ReliabilityTarget,
    eval: &Evaluation,
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    let Some(rule) = eval.rule.as_ref() else {
        return Err(Error::Infeasible(format!(
            "{} {} has no feasible rate for this configuration",
            eval.scheme, eval.form
        )));
    };
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let start = Instant::now();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let fp = sp.fading;
    let gain = sp.snr_gain();
    let k0 = rt.k0 as f64;
    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for trial in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = trial_rng(&base, trial);
                let h = sample_h(&fp, &mut rng);
                let g = sample_gbar(&fp, &mut rng);
                let k = rule.k(sp, h, g)?;
                let p = eval.error_probability(gain * h * g, k, sp.n);
                let u: f64 = rng.random();
                t.push(k, u < p, k <= k0);
            }
            Ok(t)
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        total = total.merge(t?);
    }
    let n = total.n as f64;
    let rate = total.errors as f64 / n;
    let p_k0 = total.at_k0 as f64 / n;
    let kbar_se = if total.n > 1 {
        (total.m2 / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(SimReport {
        trials: total.n,
        errors: total.errors,
        error_rate: (rt.eps_th >= MIN_VALIDATED_EPS).then_some(rate),
        error_ci99: Z99 * (rate * (1.0 - rate) / n).sqrt(),
        kbar_hat: total.mean,
        kbar_se,
        p_k0_hat: p_k0,
        p_k0_se: (p_k0 * (1.0 - p_k0) / n).sqrt(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub trials: u64,
    /// Upper bound on sup |F_N − F_W|; exact when `slack` is 0.
    pub statistic: f64,
    /// Width of the bracket around the true statistic.
    pub slack: f64,
    /// 1% critical value 1.628/√N.
    pub critical_1pct: f64,
}

impl KsReport {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical_1pct
    }
}

/// CDF evaluations used by [`ks_validate_product`] at most.
const KS_MAX_CDF: u64 = 20_000;

/// Two-sided Kolmogorov–Smirnov statistic of sampled W against `product_cdf`.
/// For large samples the CDF is evaluated at every s-th order statistic and
/// monotonicity bounds the supremum in between.
pub fn ks_validate_product(fp: &FadingParams, trials: u64, seed: u64) -> Result<KsReport> {
    if trials < 10_000 {
        return Err(Error::param("trials", format!("{trials} is below 10^4")));
    }
    fp.validate()?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| sample_w(fp, &mut trial_rng(&base, t)))
        .collect();
    w.par_sort_unstable_by(f64::total_cmp);
    let n = trials as usize;
    let stride = trials.div_ceil(KS_MAX_CDF) as usize;
    // 0-based indices of the order statistics where F is evaluated
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().expect("n > 0") != n - 1 {
        idx.push(n - 1);
    }
    let f: Vec<f64> = idx.par_iter().map(|&i| product_cdf(fp, w[i])).collect();
    let nf = n as f64;
    let mut lower = 0.0_f64;
    let mut upper = f[0];
    for (j, (&i, &fi)) in idx.iter().zip(&f).enumerate() {
        // exact deviations at the evaluated point
        let here = ((i + 1) as f64 / nf - fi).max(fi - i as f64 / nf);
        lower = lower.max(here);
        upper = upper.max(here);
        if let (Some(&i2), Some(&f2)) = (idx.get(j + 1), f.get(j + 1)) {
            upper = upper.max(i2 as f64 / nf - fi).max(f2 - (i + 1) as f64 / nf);
        }
    }
    Ok(KsReport {
        trials,
        statistic: upper,
        slack: upper - lower,
        critical_1pct: 1.628 / nf.sqrt(),
    })
}

/// F_W⁻¹(ε) by scanning a logarithmic grid for the bracketing cell, then
/// bisecting inside it.
pub fn grid_oracle_inverse(fp: &FadingParams, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(
            "grid_oracle_inverse",
            format!("eps = {eps}, need 0 < eps < 1"),
        ));
    }
    const POINTS: usize = 2000;
    let (lo_exp, hi_exp) = (-30.0_f64, 4.0_f64);
    let at = |i: usize| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / POINTS as f64);
    let mut prev = at(0);
    if product_cdf(fp, prev) >= eps {
        return Err(Error::range(
            "grid_oracle_inverse",
            format!("eps = {eps:e} below grid floor"),
        ));
    }
    for i in 1..=POINTS {
        let w = at(i);
        if product_cdf(fp, w) >= eps {
            let root = bisect(|x| product_cdf(fp, x) - eps, prev, w, 1e-15 * w, 200)?;
            return Ok(root.x);
        }
        prev = w;
    }
    Err(Error::range(
        "grid_oracle_inverse",
        format!("eps = {eps} above grid ceiling"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::product_cdf_inv_numeric;

    fn baseline(m: u32) -> SystemParams {
        SystemParams::new(FadingParams::new(5.0, 2.0, m).unwrap(), 1.0, 1000, 200).unwrap()
    }

    #[test]
    fn same_seed_same_report() {
        let sp = baseline(4);
        let rt = ReliabilityTarget::new(1e-2, 16).unwrap();
        let cfg = SimConfig::new(20_000, 7, Scheme::Ksc, Form::Asymptotic).unwrap();
        let a = simulate(&sp, &rt, &cfg).unwrap();
        let b = simulate(&sp, &rt, &cfg).unwrap();
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.kbar_hat.to_bits(), b.kbar_hat.to_bits());
        assert_eq!(a.p_k0_hat.to_bits(), b.p_k0_hat.to_bits());
        let c = simulate(&sp, &rt, &SimConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.kbar_hat.to_bits(), c.kbar_hat.to_bits());
    }

    #[test]
    fn tally_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 + 0.5).collect();
        let mut whole = Tally::default();
        xs.iter().for_each(|&x| whole.push(x, false, false));
        let (mut a, mut b) = (Tally::default(), Tally::default());
        xs[..313].iter().for_each(|&x| a.push(x, false, false));
        xs[313..].iter().for_each(|&x| b.push(x, false, false));
        let m = a.merge(b);
        assert!((m.mean - whole.mean).abs() < 1e-12);
        assert!((m.m2 - whole.m2).abs() < 1e-9 * whole.m2);
    }

    #[test]
    fn infeasible_refused_before_trials() {
        let sp = SystemParams {
            psi: 0.01,
            ..baseline(1)
        };
        let rt = ReliabilityTarget::new(1e-4, 16).unwrap();
        let cfg = SimConfig::new(10, 1, Scheme::Ftr, Form::Fbl).unwrap();
        assert!(matches!(simulate(&sp, &rt, &cfg), Err(Error::Infeasible(_))));
        assert!(SimConfig::new(0, 1, Scheme::Ftr, Form::Fbl).is_err());
    }

    #[test]
    fn tiny_targets_skip_error_rate() {
        let sp = baseline(8);
        let rt = ReliabilityTarget::new(1e-6, 16).unwrap();
        let cfg = SimConfig::new(5_000, 3, Scheme::Fcsi, Form::Asymptotic).unwrap();
        let r = simulate(&sp, &rt, &cfg).unwrap();
        assert!(r.error_rate.is_none());
        assert!(r.kbar_hat.is_finite());
    }

    #[test]
    fn ftr_asymptotic_hits_target() {
        let sp = baseline(4);
        let rt = ReliabilityTarget::new(1e-2, 16).unwrap();
        let mut cfg = SimConfig::new(200_000, 11, Scheme::Ftr, Form::Asymptotic).unwrap();
        cfg.inverse = InverseMethod::Numeric;
        let r = simulate(&sp, &rt, &cfg).unwrap();
        let sigma = r.error_sigma_at(1e-2);
        assert!((r.error_rate.unwrap() - 1e-2).abs() < 3.0 * sigma, "{r:?}");
        assert_eq!(r.p_k0_hat, 0.0);
    }

    #[test]
    fn fcsi_asymptotic_fails_only_below_k0() {
        // k = n·C(γ) sits exactly on the outage boundary; those rounds decode
        let sp = baseline(4);
        let rt = ReliabilityTarget::new(1e-2, 16).unwrap();
        let cfg = SimConfig::new(100_000, 5, Scheme::Fcsi, Form::Asymptotic).unwrap();
        let r = simulate(&sp, &rt, &cfg).unwrap();
        assert_eq!(r.errors as f64 / r.trials as f64, r.p_k0_hat);
    }

    #[test]
    fn standard_error_scales_with_sqrt_n() {
        let sp = baseline(2);
        let rt = ReliabilityTarget::new(1e-2, 16).unwrap();
        let cfg = SimConfig::new(40_000, 5, Scheme::Fcsi, Form::Asymptotic).unwrap();
        let a = simulate(&sp, &rt, &cfg).unwrap();
        let b = simulate(&sp, &rt, &SimConfig { trials: 160_000, ..cfg }).unwrap();
        let ratio = a.kbar_se / b.kbar_se;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn ks_accepts_the_product_law() {
        for m in [1, 4] {
            let fp = FadingParams::new(5.0, 2.0, m).unwrap();
            let ks = ks_validate_product(&fp, 10_000, 99).unwrap();
            assert_eq!(ks.slack, 0.0);
            assert!(ks.passes(), "{ks:?}");
        }
        let ks = ks_validate_product(&FadingParams::new(1.0, 1.0, 1).unwrap(), 10_000, 99).unwrap();
        assert!(ks.passes(), "{ks:?}");
        assert!(ks_validate_product(&FadingParams::new(5.0, 2.0, 1).unwrap(), 100, 1).is_err());
    }

    #[test]
    fn ks_strided_bound_brackets_exact() {
        let fp = FadingParams::new(5.0, 2.0, 2).unwrap();
        let ks = ks_validate_product(&fp, 50_000, 4).unwrap();
        assert!(ks.slack > 0.0 && ks.slack < 2e-4);
        assert!(ks.passes());
    }

    #[test]
    fn concentrated_law() {
        let fp = FadingParams::new(200.0, 100.0, 2).unwrap();
        // W has standard deviation ≈ 0.1 here
        assert!(product_cdf(&fp, 0.8) < 0.05);
        assert!(product_cdf(&fp, 1.2) > 0.95);
        assert!(product_cdf(&fp, 0.6) < 1e-4);
        let ks = ks_validate_product(&fp, 10_000, 2).unwrap();
        assert!(ks.passes(), "{ks:?}");
    }

    #[test]
    fn grid_inverse_agrees_with_newton() {
        for (fp, eps) in [
            (FadingParams::new(5.0, 2.0, 4).unwrap(), 1e-4),
            (FadingParams::new(4.0, 2.0, 1).unwrap(), 1e-1),
            (FadingParams::new(1.0, 1.0, 1).unwrap(), 1e-3),
        ] {
            let g = grid_oracle_inverse(&fp, eps).unwrap();
            let n = product_cdf_inv_numeric(&fp, eps).unwrap();
            assert!((g - n).abs() < 1e-6 * n, "{g} vs {n}");
        }
        let fp = FadingParams::new(5.0, 2.0, 2).unwrap();
        assert!(grid_oracle_inverse(&fp, 1e-3).unwrap() < grid_oracle_inverse(&fp, 1e-2).unwrap());
        assert!(grid_oracle_inverse(&fp, 1.0).is_err());
    }
}
