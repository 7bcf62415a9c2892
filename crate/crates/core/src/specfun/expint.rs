use super::{Precision, EULER_GAMMA};
use crate::{Error, Result};

const FPMIN: f64 = 1e-300;

/// Exponential integral E₁(x) = ∫ₓ^∞ e^{-t}/t dt for x > 0.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    exp_integral_e1_with(x, &Precision::machine())
}

/// e^x·E₁(x), finite for every x > 0 (tends to 1/x as x → ∞).
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    if x > 1.0 && x.is_finite() {
        return lentz(x, &Precision::machine());
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(exp_integral_e1(x)? * x.exp())
}

/// Continued fraction for e^x·E₁(x), x > 1.
fn lentz(x: f64, prec: &Precision) -> Result<f64> {
    let mut b = x + 1.0;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=prec.max_iter {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < prec.rel_tol {
            return Ok(h);
        }
    }
    Err(Error::convergence(
        "exp_integral_e1",
        format!("x = {x} after {} iterations", prec.max_iter),
    ))
}

pub fn exp_integral_e1_with(x: f64, prec: &Precision) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("exp_integral_e1", format!("x = {x}, need x > 0")));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x > 1.0 {
        return lentz(x, prec).map(|h| h * (-x).exp());
    }
    let mut ans = -x.ln() - EULER_GAMMA;
    let mut fact = 1.0;
    for i in 1..=prec.max_iter {
        let fi = i as f64;
        fact *= -x / fi;
        let del = -fact / fi;
        ans += del;
        if del.abs() < ans.abs() * prec.rel_tol {
            return Ok(ans);
        }
    }
    Err(Error::convergence(
        "exp_integral_e1",
        format!("x = {x} after {} iterations", prec.max_iter),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwich_bound() {
        for &x in &[1e-4, 0.3, 1.0, 1.0001, 4.0, 25.0, 300.0] {
            let e1 = exp_integral_e1(x).unwrap();
            let lower = 0.5 * (-x).exp() * (1.0 + 2.0 / x).ln();
            let upper = (-x).exp() * (1.0 + 1.0 / x).ln();
            assert!(lower < e1 && e1 < upper, "x = {x}");
        }
    }

    #[test]
    fn branches_meet_at_one() {
        let left = exp_integral_e1(1.0).unwrap();
        let right = exp_integral_e1(1.0 + 1e-12).unwrap();
        assert!((left - right).abs() < 1e-12);
        assert!((left - 0.219_383_934_395_520_27).abs() < 1e-15);
    }

    #[test]
    fn scaled_form() {
        for &x in &[0.2, 1.0, 3.0, 40.0] {
            let direct = exp_integral_e1(x).unwrap() * x.exp();
            assert!((exp_integral_e1_scaled(x).unwrap() - direct).abs() < 1e-14 * direct);
        }
        // e^x E₁(x) ~ (1/x)(1 - 1/x + 2/x² - 6/x³)
        let x: f64 = 1e4;
        let asym = (1.0 - 1.0 / x + 2.0 / (x * x) - 6.0 / x.powi(3)) / x;
        assert!((exp_integral_e1_scaled(x).unwrap() - asym).abs() < 5e-15 * asym);
        assert!((exp_integral_e1(10.0).unwrap() - 4.156_968_929_685_324e-6).abs() < 1e-19);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
    }
}
