//! Scalar root finders for monotone or bracketed problems.

use crate::{Error, Result};

/// Converged root with the residual and iteration count that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn check_bracket(what: &'static str, lo: f64, hi: f64, flo: f64, fhi: f64) -> Result<()> {
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::convergence(what, format!("NaN at bracket [{lo}, {hi}]")));
    }
    if flo * fhi > 0.0 {
        return Err(Error::convergence(
            what,
            format!("no sign change on [{lo}, {hi}]: f = {flo:e}, {fhi:e}"),
        ));
    }
    Ok(())
}

/// Plain bisection; stops when the bracket is narrower than `x_tol`
/// (absolute) or the midpoint hits an exact zero.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Result<Root> {
    let mut flo = f(lo);
    let fhi = f(hi);
    check_bracket("bisect", lo, hi, flo, fhi)?;
    if flo == 0.0 {
        return Ok(Root {
            x: lo,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fhi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
            iterations: 0,
        });
    }
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) <= x_tol || mid == lo || mid == hi {
            return Ok(Root {
                x: mid,
                residual: fm,
                iterations: it,
            });
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::convergence(
        "bisect",
        format!("bracket [{lo}, {hi}] after {max_iter} steps"),
    ))
}

/// Brent's method (inverse quadratic interpolation with bisection fallback).
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    check_bracket("brent", a, b, fa, fb)?;
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for it in 1..=max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(Root {
                x: b,
                residual: fb,
                iterations: it,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::convergence("brent", format!("last iterate {b}, f = {fb:e}")))
}

/// Newton's method kept inside a sign-change bracket: a step that leaves the
/// bracket or fails to halve the previous step is replaced by bisection.
/// `fdf` returns (f(x), f'(x)). Stops when |step| ≤ `x_atol` + `x_rtol`·|x|.
pub fn newton_bracketed<F: FnMut(f64) -> (f64, f64)>(
    mut fdf: F,
    lo: f64,
    hi: f64,
    x0: f64,
    x_atol: f64,
    x_rtol: f64,
    max_iter: usize,
) -> Result<Root> {
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    check_bracket("newton_bracketed", lo, hi, flo, fhi)?;
    if flo == 0.0 {
        return Ok(Root {
            x: lo,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fhi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
            iterations: 0,
        });
    }
    // Orient so that f(xl) < 0.
    let (mut xl, mut xh) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = if x0 > lo.min(hi) && x0 < lo.max(hi) {
        x0
    } else {
        0.5 * (lo + hi)
    };
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = fdf(x);
    for it in 1..=max_iter {
        if fx == 0.0 {
            return Ok(Root {
                x,
                residual: 0.0,
                iterations: it,
            });
        }
        let newton_leaves = ((x - xh) * dfx - fx) * ((x - xl) * dfx - fx) > 0.0;
        let too_slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        dx_old = dx;
        if newton_leaves || too_slow || !dfx.is_finite() || dfx == 0.0 {
            dx = 0.5 * (xh - xl);
            x = xl + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() <= x_atol + x_rtol * x.abs() || (xh - xl).abs() <= 4.0 * f64::EPSILON * x.abs() {
            let (fx, _) = fdf(x);
            return Ok(Root {
                x,
                residual: fx,
                iterations: it,
            });
        }
        (fx, dfx) = fdf(x);
        if fx < 0.0 {
            xl = x;
        } else {
            xh = x;
        }
    }
    Err(Error::convergence(
        "newton_bracketed",
        format!("last iterate {x}, f = {fx:e}, bracket [{xl}, {xh}]"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(x: f64) -> f64 {
        x * x * x - 2.0 * x - 5.0
    }

    const CUBIC_ROOT: f64 = 2.094_551_481_542_326_6;

    #[test]
    fn all_methods_find_the_cubic_root() {
        let b = bisect(cubic, 2.0, 3.0, 1e-14, 200).unwrap();
        let r = brent(cubic, 2.0, 3.0, 1e-15, 100).unwrap();
        let n = newton_bracketed(|x| (cubic(x), 3.0 * x * x - 2.0), 2.0, 3.0, 2.9, 0.0, 1e-15, 100).unwrap();
        for x in [b.x, r.x, n.x] {
            assert!((x - CUBIC_ROOT).abs() < 1e-13, "{x}");
        }
        assert!(r.iterations < b.iterations);
    }

    #[test]
    fn newton_survives_a_flat_start() {
        // f' vanishes at x0 = 0; the safeguard must fall back to bisection.
        let r = newton_bracketed(|x| (x * x * x - 1.0, 3.0 * x * x), -1.0, 4.0, 0.0, 0.0, 1e-14, 200).unwrap();
        assert!((r.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decreasing_functions_work_too() {
        let r = newton_bracketed(|x| ((-x).exp() - 0.5, -(-x).exp()), 0.0, 10.0, 9.0, 1e-15, 0.0, 100).unwrap();
        assert!((r.x - 2f64.ln()).abs() < 1e-13);
        let r = brent(|x| 1.0 - x, 0.0, 3.0, 1e-14, 100).unwrap();
        assert!((r.x - 1.0).abs() < 1e-13);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50),
            Err(Error::Convergence { .. })
        ));
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50).is_err());
    }
}
