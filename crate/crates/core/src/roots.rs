//! Scalar root finding on a bracket.

use crate::error::{Error, Result};

/// Brent's method for `f(x) = 0` on `[a, b]` with `f(a) f(b) <= 0`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::RootBracket(format!("no sign change on [{a}, {b}] (f = {fa}, {fb})")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
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
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
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
        if fb.is_nan() {
            return Err(Error::RootBracket(format!("function returned NaN at {b}")));
        }
    }
    Ok(b)
}

/// Expands `[lo, hi]` geometrically upwards until `f(hi)` changes sign
/// relative to `f(lo)`; `hi` must exceed `lo`.
pub fn expand_upper<F: FnMut(f64) -> f64>(mut f: F, lo: f64, mut hi: f64, max_steps: usize) -> Result<f64> {
    let flo = f(lo);
    let mut step = hi - lo;
    for _ in 0..max_steps {
        let fh = f(hi);
        if fh.is_nan() {
            return Err(Error::RootBracket(format!("NaN while expanding bracket at {hi}")));
        }
        if fh == 0.0 || fh.signum() != flo.signum() {
            return Ok(hi);
        }
        step *= 2.0;
        hi = lo + step;
    }
    Err(Error::RootBracket(format!("bracket expansion from {lo} exhausted")))
}
