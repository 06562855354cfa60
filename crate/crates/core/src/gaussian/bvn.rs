//! Bivariate normal rectangle probabilities (Drezner–Wesolowsky / Genz).

use super::normal::{norm_cdf, norm_sf};
use crate::quadrature::gauss_legendre;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// `Pr(X > h, Y > k)` for standard bivariate normal with correlation `r`.
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { norm_sf(k) };
    }
    if k == f64::NEG_INFINITY {
        return norm_sf(h);
    }
    if r >= 1.0 {
        return norm_sf(h.max(k));
    }
    if r <= -1.0 {
        return (norm_cdf(-h) - norm_cdf(k)).max(0.0);
    }
    if r == 0.0 {
        return norm_sf(h) * norm_sf(k);
    }

    let ng = if r.abs() < 0.3 {
        6
    } else if r.abs() < 0.75 {
        12
    } else {
        20
    };
    let rule = gauss_legendre(ng);
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let sn = (asr * (x + 1.0) * 0.5).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        bvn = bvn * asr / (2.0 * TWO_PI) + norm_sf(h) * norm_sf(k);
        return bvn.clamp(0.0, 1.0);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let as_ = (1.0 - r) * (1.0 + r);
    let mut a = as_.sqrt();
    let bs = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    let asr = -0.5 * (bs / as_ + hk);
    if asr > -100.0 {
        bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
    }
    if hk > -100.0 {
        let b = bs.sqrt();
        bvn -= (-hk / 2.0).exp() * TWO_PI.sqrt() * norm_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let xs = (a * (x + 1.0)).powi(2);
        let rs = (1.0 - xs).sqrt();
        let asr = -0.5 * (bs / xs + hk);
        if asr > -100.0 {
            bvn += a * w * asr.exp() * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
    }
    bvn = -bvn / TWO_PI;
    if r > 0.0 {
        bvn += norm_sf(h.max(k));
    } else {
        bvn = -bvn;
        if k > h {
            // k was negated above
            bvn += norm_cdf(k) - norm_cdf(h);
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `Pr(X <= h, Y <= k)`.
#[inline]
pub fn bvn_cdf(h: f64, k: f64, r: f64) -> f64 {
    bvn_upper(-h, -k, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureConfig};

    fn orthant(r: f64) -> f64 {
        0.25 + r.asin() / TWO_PI
    }

    // Pr(X<=h, Y<=k) = ∫_{-∞}^h φ(x) Φ((k - r x)/√(1-r²)) dx
    fn oracle(h: f64, k: f64, r: f64) -> f64 {
        let s = (1.0 - r * r).sqrt();
        let lo = -12.0f64;
        integrate(
            |x| super::super::normal::norm_pdf(x) * norm_cdf((k - r * x) / s),
            lo,
            h,
            &[],
            &QuadratureConfig::default().with_rel_tol(1e-12),
        )
        .value
    }

    #[test]
    fn orthant_values() {
        for &r in &[-0.99, -0.9, -0.5, -0.2, 0.0, 0.2, 0.5, 0.9, 0.95, 0.999] {
            assert!((bvn_cdf(0.0, 0.0, r) - orthant(r)).abs() < 1e-14, "r={r}");
        }
    }

    #[test]
    fn matches_conditional_integral() {
        let pts = [(-1.3, 0.4), (0.7, 2.1), (2.5, -0.3), (-2.0, -2.5), (3.1, 3.4)];
        for &r in &[-0.95, -0.6, -0.1, 0.25, 0.7, 0.93, 0.98] {
            for &(h, k) in &pts {
                let a = bvn_cdf(h, k, r);
                let b = oracle(h, k, r);
                assert!((a - b).abs() < 1e-12, "h={h} k={k} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn upper_tail_relative_accuracy() {
        // by symmetry Pr(X>h,Y>k) = Pr(X<-h, Y<-k)
        for &r in &[0.2, 0.5, 0.8, 0.95] {
            let h = 5.0;
            let a = bvn_upper(h, h, r);
            let b = oracle(-h, -h, r);
            assert!(((a - b) / b).abs() < 1e-7, "r={r}: {a} vs {b}");
        }
    }
}
