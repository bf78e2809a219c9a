//! Bracketed scalar root finding: bisection to a narrow bracket, then a few
//! guarded Newton steps.

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 400;
const NEWTON_POLISH: usize = 5;

/// Width at which bisection hands over to Newton polishing.
pub fn bisection_width(lo: f64, hi: f64) -> f64 {
    1e-13 * lo.abs().max(hi.abs()).max(1.0)
}

/// Finds a root of `f` on `[lo, hi]` given a sign change.
///
/// `f` returns `(value, derivative)`; a non-finite derivative skips polishing.
/// Newton steps leaving the current bracket are rejected.
pub fn bisect_newton<F>(f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (mut fa, _) = f(a)?;
    let (fb, _) = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "f({a}) = {fa} and f({b}) = {fb} share a sign"
        )));
    }
    let tol = bisection_width(a, b);
    for _ in 0..MAX_BISECTIONS {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (fm, _) = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }

    let mut x = 0.5 * (a + b);
    let (mut fx, mut dfx) = f(x)?;
    for _ in 0..NEWTON_POLISH {
        if fx == 0.0 || !dfx.is_finite() || dfx == 0.0 {
            break;
        }
        let next = x - fx / dfx;
        if !(next >= a && next <= b) || next == x {
            break;
        }
        let (fn_, dfn) = f(next)?;
        if fn_.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fn_;
        dfx = dfn;
    }
    Ok(x)
}

/// Plain bisection for functions without a cheap derivative.
pub fn bisect<F>(f: F, lo: f64, hi: f64, width: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa0 = f(a)?;
    let fb0 = f(b)?;
    if fa0 == 0.0 {
        return Ok(a);
    }
    if fb0 == 0.0 {
        return Ok(b);
    }
    if fa0.signum() == fb0.signum() {
        return Err(Error::Bracket(format!(
            "f({a}) = {fa0} and f({b}) = {fb0} share a sign"
        )));
    }
    let neg_at_a = fa0 < 0.0;
    for _ in 0..MAX_BISECTIONS {
        if b - a <= width {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
