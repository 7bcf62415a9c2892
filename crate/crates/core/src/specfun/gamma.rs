use super::Precision;
use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FPMIN: f64 = 1e-300;

/// Stirling series for ln Γ(a), a >= 10.
fn ln_gamma_stirling(a: f64) -> f64 {
    let inv = 1.0 / a;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2
                * (1.0 / 360.0
                    - inv2
                        * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0 - inv2 * 691.0 / 360_360.0)))));
    (a - 0.5) * a.ln() - a + LN_SQRT_2PI + series
}

pub(crate) fn ln_gamma_unchecked(a: f64) -> f64 {
    if a >= 10.0 {
        return ln_gamma_stirling(a);
    }
    if a < 0.5 {
        // ln Γ(a) = ln Γ(a + 1) - ln a keeps the Lanczos sum on its accurate side.
        return ln_gamma_unchecked(a + 1.0) - a.ln();
    }
    let z = a - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Natural logarithm of the gamma function for `a > 0`.
pub fn log_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("log_gamma", format!("a = {a}, need a > 0")));
    }
    Ok(ln_gamma_unchecked(a))
}

/// Series for the regularized lower incomplete gamma, valid for x < a + 1.
fn lower_series(a: f64, x: f64, prec: &Precision) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..prec.max_iter {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * prec.rel_tol {
            return Ok(sum.ln() - x + a * x.ln() - ln_gamma_unchecked(a));
        }
    }
    Err(Error::convergence(
        "incomplete gamma series",
        format!("a = {a}, x = {x} after {} terms", prec.max_iter),
    ))
}

/// Modified Lentz continued fraction for the regularized upper incomplete gamma, x >= a + 1.
fn upper_fraction(a: f64, x: f64, prec: &Precision) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=prec.max_iter {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < prec.rel_tol {
            return Ok(h.ln() - x + a * x.ln() - ln_gamma_unchecked(a));
        }
    }
    Err(Error::convergence(
        "incomplete gamma continued fraction",
        format!("a = {a}, x = {x} after {} terms", prec.max_iter),
    ))
}

/// Returns `(ln P(a,x), ln Q(a,x))`; the side computed directly is accurate in relative terms.
pub(crate) fn reg_pair(a: f64, x: f64, prec: &Precision) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == f64::INFINITY {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    if x < a + 1.0 {
        let ln_p = lower_series(a, x, prec)?;
        Ok((ln_p, (-ln_p.exp()).ln_1p()))
    } else {
        let ln_q = upper_fraction(a, x, prec)?;
        Ok(((-ln_q.exp()).ln_1p(), ln_q))
    }
}

fn check_args(func: &'static str, a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(func, format!("a = {a}, need a > 0")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(func, format!("x = {x}, need x >= 0")));
    }
    Ok(())
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
pub fn gamma_upper_reg(a: f64, x: f64) -> Result<f64> {
    gamma_upper_reg_with(a, x, &Precision::machine())
}

pub fn gamma_upper_reg_with(a: f64, x: f64, prec: &Precision) -> Result<f64> {
    check_args("gamma_upper_reg", a, x)?;
    Ok(reg_pair(a, x, prec)?.1.exp())
}

/// ln Q(a, x), finite far into the tail where Q itself underflows.
pub fn ln_gamma_upper_reg(a: f64, x: f64) -> Result<f64> {
    check_args("ln_gamma_upper_reg", a, x)?;
    Ok(reg_pair(a, x, &Precision::machine())?.1)
}

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
pub fn gamma_lower_reg(a: f64, x: f64) -> Result<f64> {
    check_args("gamma_lower_reg", a, x)?;
    Ok(reg_pair(a, x, &Precision::machine())?.0.exp())
}

/// Upper incomplete gamma Γ(a, x) (not regularized).
pub fn gamma_upper(a: f64, x: f64) -> Result<f64> {
    check_args("gamma_upper", a, x)?;
    let ln = reg_pair(a, x, &Precision::machine())?.1 + ln_gamma_unchecked(a);
    if ln > f64::MAX.ln() {
        return Err(Error::range("gamma_upper", format!("Γ({a}, {x}) overflows")));
    }
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_small_integers() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        let fact: f64 = (1..=9).map(|i| i as f64).product();
        assert!((log_gamma(10.0).unwrap() - fact.ln()).abs() < 1e-13);
    }

    #[test]
    fn log_gamma_half_integer_product() {
        // Γ(5.5) = 4.5 · 3.5 · 2.5 · 1.5 · 0.5 · √π
        let exact = (4.5f64 * 3.5 * 2.5 * 1.5 * 0.5 * std::f64::consts::PI.sqrt()).ln();
        let got = log_gamma(5.5).unwrap();
        assert!((got - exact).abs() / exact < 1e-14, "{got} vs {exact}");
        assert!((got - 3.957_813_967_618_716).abs() < 1e-12);
    }

    #[test]
    fn log_gamma_branches_agree() {
        // Lanczos and Stirling meet at a = 10.
        let below = ln_gamma_unchecked(9.999_999_999);
        let above = ln_gamma_stirling(9.999_999_999);
        assert!((below - above).abs() < 1e-13);
        let tiny = log_gamma(1e-3).unwrap();
        assert!((tiny - 6.907_178_885_383_854).abs() < 1e-12);
    }

    #[test]
    fn upper_incomplete_closed_forms() {
        assert!((gamma_upper(1.0, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-16);
        assert!((gamma_upper(3.0, 0.0).unwrap() - 2.0).abs() < 1e-14);
        // Γ(n, x) = (n-1)! e^{-x} Σ_{k<n} x^k / k!
        let x: f64 = 5.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..5 {
            term *= x / k as f64;
            sum += term;
        }
        let exact = 24.0 * (-x).exp() * sum;
        let got = gamma_upper(5.0, 5.0).unwrap();
        assert!((got - exact).abs() / exact < 1e-13);
        assert!((got - 10.571_838_841_565_098).abs() < 1e-9);
    }

    #[test]
    fn regularized_pair_is_complementary() {
        for &(a, x) in &[(0.5, 0.1), (2.0, 2.9), (2.0, 3.1), (8.0, 12.0), (40.0, 35.0)] {
            let p = gamma_lower_reg(a, x).unwrap();
            let q = gamma_upper_reg(a, x).unwrap();
            assert!((p + q - 1.0).abs() < 1e-14, "a={a} x={x}");
        }
        assert_eq!(gamma_upper_reg(3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain { .. })));
        assert!(matches!(gamma_upper(-1.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(gamma_upper_reg(1.0, -1.0), Err(Error::Domain { .. })));
        assert!(matches!(gamma_upper(300.0, 1.0), Err(Error::Range { .. })));
    }
}
