//! Special functions: total wrappers around statrs plus inverses it lacks.

use crate::gaussian::normal::norm_ppf;
use crate::roots::brent;
use statrs::function::beta::beta_reg;

pub use statrs::function::gamma::ln_gamma;

/// `ln(x^a e^{-x} / Γ(a))`.
#[inline]
fn ln_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

/// `P(a, x)` by its power series; for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (ln_prefactor(a, x) + sum.ln()).exp()
}

/// `Q(a, x)` by the Lentz continued fraction; for `x >= a + 1`.
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (ln_prefactor(a, x) + h.ln()).exp()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x == f64::INFINITY {
        0.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

/// `ln` of the gamma density with shape `a` and unit rate.
#[inline]
pub fn ln_gamma_density(a: f64, x: f64) -> f64 {
    (a - 1.0) * x.ln() - x - ln_gamma(a)
}

#[derive(Clone, Copy)]
enum Side {
    Lower,
    Upper,
}

fn inv_incomplete_gamma(a: f64, target: f64, side: Side) -> f64 {
    if target <= 0.0 {
        return match side {
            Side::Lower => 0.0,
            Side::Upper => f64::INFINITY,
        };
    }
    if target >= 1.0 {
        return match side {
            Side::Lower => f64::INFINITY,
            Side::Upper => 0.0,
        };
    }
    // work on the smaller tail for relative accuracy
    let (use_lower, t) = match side {
        Side::Lower if target <= 0.5 => (true, target),
        Side::Lower => (false, 1.0 - target),
        Side::Upper if target <= 0.5 => (false, target),
        Side::Upper => (true, 1.0 - target),
    };
    let lt = t.ln();
    let h = |u: f64| {
        let x = u.exp();
        let v = if use_lower { gamma_p(a, x) } else { gamma_q(a, x) };
        if v <= 0.0 {
            // far tail: asymptotic logs keep the function monotone
            if use_lower {
                a * u - ln_gamma(a + 1.0) - lt
            } else {
                ln_gamma_density(a, x) - lt
            }
        } else {
            v.ln() - lt
        }
    };
    // Wilson–Hilferty start
    let p_lower = if use_lower { t } else { 1.0 - t };
    let z = if use_lower { norm_ppf(t) } else { -norm_ppf(t) };
    let c = 1.0 / (9.0 * a);
    let wh = a * (1.0 - c + z * c.sqrt()).powi(3);
    let small = ((p_lower.ln() + ln_gamma(a + 1.0)) / a).exp();
    let x0 = if wh > 0.0 && a > 0.5 && wh.is_finite() {
        wh
    } else if use_lower {
        small.max(1e-300)
    } else {
        (-lt).max(1.0)
    };
    let u0 = x0.ln();
    let f0 = h(u0);
    // h increases in u on the lower side and decreases on the upper side
    let increasing = use_lower;
    let want_up = (f0 < 0.0) == increasing;
    let mut step = 0.5;
    let mut lo = u0;
    let mut hi = u0;
    for _ in 0..200 {
        if want_up {
            hi = u0 + step;
            if (h(hi) >= 0.0) == increasing {
                break;
            }
            lo = hi;
        } else {
            lo = u0 - step;
            if (h(lo) <= 0.0) == increasing {
                break;
            }
            hi = lo;
        }
        step *= 2.0;
    }
    let u = brent(h, lo.min(hi), lo.max(hi), 1e-15, 200).unwrap_or(u0);
    u.exp()
}

/// `x` with `P(a, x) = p`.
pub fn inv_gamma_p(a: f64, p: f64) -> f64 {
    inv_incomplete_gamma(a, p, Side::Lower)
}

/// `x` with `Q(a, x) = q`.
pub fn inv_gamma_q(a: f64, q: f64) -> f64 {
    inv_incomplete_gamma(a, q, Side::Upper)
}

/// Student-t distribution function with `df` degrees of freedom.
pub fn student_t_cdf(x: f64, df: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + x * x));
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Upper tail `Pr(T > x)`.
pub fn student_t_sf(x: f64, df: f64) -> f64 {
    student_t_cdf(-x, df)
}
