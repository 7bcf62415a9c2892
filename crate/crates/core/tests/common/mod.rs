//! Property checks shared by the proptest suite and the acceptance harness.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use wpcn::channel::{product_cdf, product_pdf, product_sf, FadingParams, SystemParams};
use wpcn::fbl::{awgn_error, RatePoint};
use wpcn::quad::Quadrature;
use wpcn::schemes::{
    evaluate, ftr_chi, ftr_optimal_blocklengths, ftr_rate_from_chi, Form, InverseMethod, ReliabilityTarget, Scheme,
};
use wpcn::specfun::{gauss_q, gauss_q_inv, lambert_w0};

pub type Check = std::result::Result<(), TestCaseError>;

pub fn fading() -> impl Strategy<Value = FadingParams> {
    (0.5f64..8.0, 0.5f64..8.0, 1u32..=8).prop_map(|(m1, m2, m)| FadingParams::new(m1, m2, m).unwrap())
}

pub fn lambert_round_trip(w: f64) -> Check {
    let x = w * w.exp();
    let back = lambert_w0(x).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((back - w).abs() <= 1e-10 * (1.0 + w.abs()), "w = {w}: got {back}");
    Ok(())
}

/// `log_p` is log₁₀ p.
pub fn q_inv_round_trip(log_p: f64) -> Check {
    let p = 10f64.powf(log_p);
    let z = gauss_q_inv(p).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let back = gauss_q(z);
    prop_assert!((back - p).abs() <= 1e-10 * p, "p = {p:e}: Q(Q⁻¹) = {back:e}");
    Ok(())
}

/// ∫ f_W = 1, integrated in u = ln w so both ends are smooth.
pub fn pdf_normalized(fp: FadingParams) -> Check {
    let quad = Quadrature::new(1e-13, 1e-12);
    let f = |u: f64| {
        let w = u.exp();
        product_pdf(&fp, w).unwrap_or(0.0) * w
    };
    let points = [-80.0, -20.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let total = quad
        .integrate_pieces(f, &points, Some(1.0))
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((total - 1.0).abs() <= 1e-8, "{fp:?}: ∫f_W = {total}");
    Ok(())
}

pub fn cdf_monotone(fp: FadingParams, a: f64, b: f64) -> Check {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let (flo, fhi) = (product_cdf(&fp, lo), product_cdf(&fp, hi));
    prop_assert!((0.0..=1.0).contains(&flo) && (0.0..=1.0).contains(&fhi));
    prop_assert!(flo <= fhi, "{fp:?}: F({lo}) = {flo} > F({hi}) = {fhi}");
    prop_assert!((flo + product_sf(&fp, lo) - 1.0).abs() <= 1e-12);
    Ok(())
}

pub fn awgn_monotone(gamma: f64, dgamma: f64, k: f64, dk: f64, n: u32) -> Check {
    let e = awgn_error(gamma, &RatePoint { k, n });
    let more_k = awgn_error(gamma, &RatePoint { k: k + dk, n });
    let more_snr = awgn_error(gamma + dgamma, &RatePoint { k, n });
    prop_assert!(more_k >= e, "k: {e} -> {more_k}");
    prop_assert!(more_snr <= e, "gamma: {e} -> {more_snr}");
    Ok(())
}

/// Second differences of k(n) = n·log₂(1 + (δ−n)χ/n) over n = 1..δ−1.
pub fn ftr_concave(chi: f64, delta: u32) -> Check {
    let k: Vec<f64> = (1..delta).map(|n| ftr_rate_from_chi(chi, delta - n, n)).collect();
    for (i, t) in k.windows(3).enumerate() {
        let d2 = t[0] - 2.0 * t[1] + t[2];
        prop_assert!(
            d2 <= 1e-9 * t[1].abs().max(1.0),
            "chi {chi}, delta {delta}, n {}: {d2}",
            i + 2
        );
    }
    Ok(())
}

/// n* against ε_th with the exact inverse, which is monotone in ε.
pub fn n_star_monotone(fp: FadingParams, psi: f64, log_eps: (f64, f64)) -> Check {
    let (lo, hi) = if log_eps.0 <= log_eps.1 {
        log_eps
    } else {
        (log_eps.1, log_eps.0)
    };
    let sp = SystemParams::new(fp, psi, 600, 600).unwrap();
    let n_star = |log_e: f64| -> std::result::Result<u32, TestCaseError> {
        let chi =
            ftr_chi(&sp, 10f64.powf(log_e), InverseMethod::Numeric).map_err(|e| TestCaseError::fail(e.to_string()))?;
        Ok(ftr_optimal_blocklengths(1200, chi)
            .map_err(|e| TestCaseError::fail(e.to_string()))?
            .0)
    };
    let (a, b) = (n_star(lo)?, n_star(hi)?);
    prop_assert!(a <= b, "{fp:?}, psi {psi}: n*(1e{lo}) = {a} > n*(1e{hi}) = {b}");
    Ok(())
}

/// Relative gap between the asymptotic and finite-blocklength average message size.
/// FTR uses the exact inverse so the gap is not polluted by the closed-form error.
pub fn fbl_gap(
    sp: &SystemParams,
    rt: &ReliabilityTarget,
    scheme: Scheme,
) -> std::result::Result<Option<f64>, TestCaseError> {
    let run =
        |form| evaluate(sp, rt, scheme, form, InverseMethod::Numeric).map_err(|e| TestCaseError::fail(e.to_string()));
    let (a, f) = (run(Form::Asymptotic)?.outcome, run(Form::Fbl)?.outcome);
    if !(a.feasible && f.feasible) || a.kbar.max(f.kbar) <= 50.0 {
        return Ok(None);
    }
    Ok(Some((a.kbar - f.kbar).abs() / a.kbar.max(f.kbar)))
}

pub fn fbl_gap_small(sp: SystemParams, rt: ReliabilityTarget, scheme: Scheme) -> Check {
    if let Some(gap) = fbl_gap(&sp, &rt, scheme)? {
        prop_assert!(gap <= 0.10, "{scheme} {sp:?} {rt:?}: gap {gap}");
    }
    Ok(())
}

pub fn gap_config() -> impl Strategy<Value = (SystemParams, ReliabilityTarget)> {
    (
        1u32..=8,
        0.0f64..15.0,
        prop::sample::select(vec![1e-2, 1e-3, 1e-4]),
        100u32..=600,
    )
        .prop_map(|(m, psi_db, eps, n)| {
            let fp = FadingParams::new(5.0, 2.0, m).unwrap();
            let sp = SystemParams::new(fp, 10f64.powf(psi_db / 10.0), 1200 - n, n).unwrap();
            (sp, ReliabilityTarget::new(eps, 16).unwrap())
        })
}

fn s<T: std::fmt::Debug>(e: proptest::test_runner::TestError<T>) -> String {
    format!("{e:?}")
}

/// Runs every property with a fixed seed; returns the failures.
pub fn run_all(cases: u32) -> Vec<String> {
    let mut failures = Vec::new();
    let mut runner = |name: &str, cases: u32, f: &dyn Fn(&mut TestRunner) -> std::result::Result<(), String>| {
        let config = Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        };
        let mut r = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
        if let Err(e) = f(&mut r) {
            failures.push(format!("{name}: {e}"));
        }
    };
    runner("lambert", cases, &|r| {
        r.run(&(-0.999f64..30.0), lambert_round_trip).map_err(s)
    });
    runner("q_inv", cases, &|r| {
        r.run(&(-15.0f64..-0.0005), q_inv_round_trip).map_err(s)
    });
    runner("pdf_norm", cases / 4, &|r| r.run(&fading(), pdf_normalized).map_err(s));
    runner("cdf_monotone", cases, &|r| {
        r.run(&(fading(), 0.0f64..20.0, 0.0f64..20.0), |(fp, a, b)| {
            cdf_monotone(fp, a, b)
        })
        .map_err(s)
    });
    runner("awgn_monotone", cases, &|r| {
        r.run(
            &(1e-3f64..100.0, 0.0f64..10.0, 0.0f64..2000.0, 0.0f64..50.0, 1u32..2000),
            |(g, dg, k, dk, n)| awgn_monotone(g, dg, k, dk, n),
        )
        .map_err(s)
    });
    runner("ftr_concave", cases / 4, &|r| {
        r.run(&(1e-3f64..1e3, 2u32..3000), |(chi, d)| ftr_concave(chi, d))
            .map_err(s)
    });
    runner("n_star_monotone", cases / 4, &|r| {
        r.run(
            &(fading(), 0.1f64..100.0, (-6.0f64..-1.0, -6.0f64..-1.0)),
            |(fp, psi, e)| n_star_monotone(fp, psi, e),
        )
        .map_err(s)
    });
    // fCSI has no asymptotic stand-in for its rate; its gap is the dispersion penalty itself
    for scheme in [Scheme::Ftr, Scheme::Ksc] {
        let cases = if scheme == Scheme::Ksc { cases / 16 } else { cases / 4 };
        runner(&format!("fbl_gap_{scheme}"), cases.max(4), &|r| {
            r.run(&gap_config(), |(sp, rt)| fbl_gap_small(sp, rt, scheme))
                .map_err(s)
        });
    }
    failures
}
