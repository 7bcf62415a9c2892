use super::gamma::reg_pair;
use super::Precision;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Gaussian tail Q(x) = P[N(0,1) > x], accurate in relative terms for large x.
pub fn gauss_q(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    // Q(|x|) = Γ(1/2, x²/2) / (2 Γ(1/2))
    let (ln_p, ln_q) = reg_pair(0.5, 0.5 * x * x, &Precision::machine())
        .expect("incomplete gamma at a = 1/2 converges for every finite x");
    if x >= 0.0 {
        0.5 * ln_q.exp()
    } else {
        0.5 + 0.5 * ln_p.exp()
    }
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Rational approximation of the standard normal quantile (relative error ~1e-9).
fn normal_quantile_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Inverse of [`gauss_q`] on (0, 1).
pub fn gauss_q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("gauss_q_inv", format!("p = {p}, need 0 < p < 1")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut z = -normal_quantile_seed(p);
    // Halley refinement of Q(z) = p; Q' = -φ, Q'' = z φ.
    for _ in 0..3 {
        let dens = phi(z);
        if dens == 0.0 {
            break;
        }
        let t = -(gauss_q(z) - p) / dens;
        let step = t / (1.0 + 0.5 * t * z);
        z -= step;
        if step.abs() <= 1e-16 * z.abs().max(1.0) {
            break;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetry_points() {
        assert_eq!(gauss_q(0.0), 0.5);
        assert_eq!(gauss_q_inv(0.5).unwrap(), 0.0);
        for &x in &[0.3, 1.7, 4.2] {
            assert!((gauss_q(x) + gauss_q(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn deep_tail_keeps_relative_accuracy() {
        // Mills-ratio asymptotics: Q(x) ≈ φ(x)/x (1 - 1/x² + 3/x⁴ - 15/x⁶)
        let x: f64 = 30.0;
        let approx = phi(x) / x * (1.0 - 1.0 / x.powi(2) + 3.0 / x.powi(4) - 15.0 / x.powi(6));
        assert!((gauss_q(x) - approx).abs() / approx < 1e-9);
        assert!(gauss_q(40.0) < 1e-300);
    }

    #[test]
    fn quantile_at_ten_percent() {
        // bisection on the Q-function itself as the oracle
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gauss_q(mid) > 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = gauss_q_inv(0.1).unwrap();
        assert!((got - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!((got - 1.281_551_565_544_600_5).abs() < 1e-12);
    }

    #[test]
    fn inverse_rejects_closed_interval_ends() {
        assert!(gauss_q_inv(0.0).is_err());
        assert!(gauss_q_inv(1.0).is_err());
        assert!(gauss_q_inv(f64::NAN).is_err());
    }
}
