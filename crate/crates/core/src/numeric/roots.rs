//! Bracketed scalar root finding.

use crate::{Error, Result};

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::Root("non-finite bracket value"));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Root("bracket does not change sign"));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Root("non-finite function value"));
        }
    }
    Err(Error::Root("iteration limit"))
}

/// Grows `[x0 - h, x0 + h]` geometrically until `f` changes sign, keeping the
/// bracket inside `[lo, hi]`.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    h: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    let mut h = h;
    for _ in 0..60 {
        let a = (x0 - h).max(lo);
        let b = (x0 + h).min(hi);
        let fa = f(a);
        let fb = f(b);
        if fa.is_finite() && fb.is_finite() && fa.signum() != fb.signum() {
            return Ok((a, b));
        }
        if a == lo && b == hi {
            break;
        }
        h *= 1.6;
    }
    Err(Error::Root("no sign change found"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0 * x - 5.0, 2.0, 3.0, 1e-15).unwrap();
        assert!((r - 2.0945514815423265).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn expands_to_bracket() {
        let (a, b) = expand_bracket(|x: f64| x.cos(), 1.0, 0.01, 0.0, 3.0).unwrap();
        let r = brent(|x: f64| x.cos(), a, b, 1e-15).unwrap();
        assert!((r - core::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }
}
