use super::Precision;
use crate::{Error, Result};
use std::f64::consts::E;

const BRANCH_POINT: f64 = -1.0 / E;

/// Series of W about the branch point in p = sqrt(2 (e x + 1)).
fn branch_series(p: f64) -> f64 {
    -1.0 + p
        * (1.0
            + p * (-1.0 / 3.0
                + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17_280.0 + p * (-221.0 / 8_505.0))))))
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        branch_series((2.0 * (E * x + 1.0)).max(0.0).sqrt())
    } else if x < 3.0 {
        x.ln_1p() * (1.0 - 0.5 * x.ln_1p() / (1.0 + x.ln_1p()))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// Principal branch W₀ of the Lambert W function, x >= -1/e.
pub fn lambert_w0(x: f64) -> Result<f64> {
    lambert_w0_with(x, &Precision::machine())
}

pub fn lambert_w0_with(x: f64, prec: &Precision) -> Result<f64> {
    if x.is_nan() || x < BRANCH_POINT {
        return Err(Error::domain("lambert_w0", format!("x = {x}, need x >= -1/e")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let p2 = 2.0 * (E * x + 1.0);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }
    if p2 < 1e-6 {
        // Halley stalls as W -> -1; the truncated series is exact to ~p^7 here.
        return Ok(branch_series(p2.sqrt()));
    }
    let mut w = initial_guess(x);
    let mut last_step = f64::INFINITY;
    for _ in 0..prec.max_iter {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let scale = 1.0 + w.abs();
        // a step that no longer shrinks at this size is rounding noise
        if step.abs() <= prec.rel_tol * scale || (step.abs() >= last_step && step.abs() <= 1e-12 * scale) {
            return Ok(w - step);
        }
        w -= step;
        last_step = step.abs();
    }
    Err(Error::convergence("lambert_w0", format!("x = {x}, last iterate {w}")))
}
