//! Univariate standard normal helpers.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

#[inline]
pub fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// `Pr(Z <= x)`.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `Pr(Z > x)`, accurate in the upper tail.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

/// Inverse of [`norm_cdf`] (Wichura's AS241). Returns `±inf` at the endpoints.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r
            + 45921.953931549871457)
            * r
            + 13731.693765509461125)
            * r
            + 1971.5909503065514427)
            * r
            + 133.14166789178437745)
            * r)
            + 3.387132872796366608;
        let den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r
            + 21213.794301586595867)
            * r
            + 5394.1960214247511077)
            * r
            + 687.1870074920579083)
            * r
            + 42.313330701600911252)
            * r)
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let x = ppf_tail(tail);
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// `x > 0` with `Pr(Z > x) = q`, for `q < 0.075`.
fn ppf_tail(q: f64) -> f64 {
    let mut r = (-q.ln()).sqrt();
    if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734;
        let den = ((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r
            + 0.14810397642748007459)
            * r
            + 0.68976733498510000455)
            * r
            + 1.6763848301838038494)
            * r
            + 2.05319162663775882187)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772;
        let den = ((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r
            + 7.868691311456132591e-4)
            * r
            + 0.0148753612908506148525)
            * r
            + 0.13692988092273580531)
            * r
            + 0.59983220655588793769)
            * r
            + 1.0;
        num / den
    }
}

/// `x` with `Pr(Z > x) = q`, accurate for tiny `q`.
pub fn norm_isf(q: f64) -> f64 {
    -norm_ppf(q)
}

/// Log of the upper tail `Pr(Z > x)`, finite far into the tail.
pub fn ln_norm_sf(x: f64) -> f64 {
    if x < 30.0 {
        return norm_sf(x).ln();
    }
    // asymptotic Mills ratio expansion
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - x.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((norm_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!((norm_ppf(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((norm_ppf(1e-10) + 6.361_340_902_404_056).abs() < 1e-13);
        assert!((norm_sf(10.0) - 7.619_853_024_160_527e-24).abs() / 7.6e-24 < 1e-12);
    }

    #[test]
    fn ppf_inverts_cdf_in_tails() {
        for &p in &[1e-300, 1e-15, 1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12] {
            let x = norm_ppf(p);
            let back = norm_cdf(x);
            assert!((back - p).abs() <= 1e-12 * p.max(1e-300) + 1e-16, "p={p} back={back}");
        }
    }

    #[test]
    fn log_sf_is_continuous_at_switch() {
        let a = ln_norm_sf(30.0 - 1e-9);
        let b = ln_norm_sf(30.0);
        assert!((a - b).abs() < 1e-6);
    }
}
