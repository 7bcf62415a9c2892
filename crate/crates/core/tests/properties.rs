mod common;

use common::*;
use proptest::prelude::*;
use wpcn::schemes::Scheme;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lambert_round_trips(w in -0.999f64..30.0) {
        lambert_round_trip(w)?;
    }

    #[test]
    fn q_inverse_round_trips(log_p in -15.0f64..-0.0005) {
        q_inv_round_trip(log_p)?;
    }

    #[test]
    fn cdf_is_monotone(fp in fading(), a in 0.0f64..20.0, b in 0.0f64..20.0) {
        cdf_monotone(fp, a, b)?;
    }

    #[test]
    fn awgn_error_is_monotone(
        g in 1e-3f64..100.0,
        dg in 0.0f64..10.0,
        k in 0.0f64..2000.0,
        dk in 0.0f64..50.0,
        n in 1u32..2000,
    ) {
        awgn_monotone(g, dg, k, dk, n)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pdf_integrates_to_one(fp in fading()) {
        pdf_normalized(fp)?;
    }

    #[test]
    fn ftr_rate_is_concave_in_n(chi in 1e-3f64..1e3, delta in 2u32..3000) {
        ftr_concave(chi, delta)?;
    }

    #[test]
    fn n_star_grows_with_eps(fp in fading(), psi in 0.1f64..100.0, e in (-6.0f64..-1.0, -6.0f64..-1.0)) {
        n_star_monotone(fp, psi, e)?;
    }

    #[test]
    fn ftr_fbl_gap_is_small_at_large_rates((sp, rt) in gap_config()) {
        fbl_gap_small(sp, rt, Scheme::Ftr)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ksc_fbl_gap_is_small_at_large_rates((sp, rt) in gap_config()) {
        fbl_gap_small(sp, rt, Scheme::Ksc)?;
    }
}
