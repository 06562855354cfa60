//! A fixed quadrature rule over the scale variable.
//!
//! Likelihood evaluations need the same radial integral at thousands of
//! points for one parameter value. The rule places Gauss–Legendre panels
//! uniformly in `log p` on both tails of the probability scale, so the scale
//! quantiles are computed once and every integral becomes a weighted sum.
//! Because the nodes do not move with the integrand, the resulting
//! likelihood is a smooth function of the parameters.

use crate::error::{Error, Result};
use crate::gaussian::normal::{norm_isf, norm_pdf, norm_sf};
use crate::quadrature::gauss_legendre;
use crate::radial::RadialLaw;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    /// Panels per tail.
    pub panels: usize,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Smallest tail probability covered.
    pub p_min: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self { panels: 24, order: 12, p_min: 1e-17 }
    }
}

#[derive(Debug, Clone)]
pub struct RadialRule {
    r: Vec<f64>,
    w: Vec<f64>,
    ln_w: Vec<f64>,
    ln_r: Vec<f64>,
    inv_r: Vec<f64>,
    median: f64,
}

impl RadialRule {
    pub fn new(law: &RadialLaw, cfg: &RuleConfig) -> Result<Self> {
        law.validate()?;
        if cfg.panels == 0 || cfg.order == 0 || cfg.order > 40 || !(cfg.p_min > 0.0 && cfg.p_min < 0.5) {
            return Err(Error::InvalidParameter("invalid radial rule configuration".into()));
        }
        let mut r = Vec::new();
        let mut w = Vec::new();
        if let RadialLaw::Dirac { r0 } = *law {
            r.push(r0);
            w.push(1.0);
        } else {
            let gl = gauss_legendre(cfg.order);
            let s0 = cfg.p_min.ln();
            let s1 = 0.5f64.ln();
            let h = (s1 - s0) / cfg.panels as f64;
            for upper in [false, true] {
                for k in 0..cfg.panels {
                    let a = s0 + k as f64 * h;
                    let half = 0.5 * h;
                    let mid = a + half;
                    for (x, wx) in gl.nodes.iter().zip(&gl.weights) {
                        let s = mid + half * x;
                        let p = s.exp();
                        let rr = if upper {
                            law.quantile_upper_unchecked(p)
                        } else {
                            law.quantile_unchecked(p)
                        };
                        let ww = half * wx * p;
                        if rr.is_finite() && rr > 0.0 && ww > 0.0 {
                            r.push(rr);
                            w.push(ww);
                        }
                    }
                }
            }
            // mass outside [p_min, 1 - p_min] is left out; renormalise
            let total: f64 = w.iter().sum();
            let mut pairs: Vec<(f64, f64)> = r.iter().zip(&w).map(|(&a, &b)| (a, b / total)).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            r = pairs.iter().map(|p| p.0).collect();
            w = pairs.iter().map(|p| p.1).collect();
        }
        let median = law.quantile_unchecked(0.5);
        Ok(Self {
            ln_w: w.iter().map(|v| v.ln()).collect(),
            ln_r: r.iter().map(|v| v.ln()).collect(),
            inv_r: r.iter().map(|v| 1.0 / v).collect(),
            r,
            w,
            median,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Nodes in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn ln_weights(&self) -> &[f64] {
        &self.ln_w
    }

    pub fn ln_nodes(&self) -> &[f64] {
        &self.ln_r
    }

    pub fn inv_nodes(&self) -> &[f64] {
        &self.inv_r
    }

    /// `Σ_j w_j h(r_j)`.
    pub fn sum<F: FnMut(f64) -> f64>(&self, mut h: F) -> f64 {
        self.r.iter().zip(&self.w).map(|(&r, &w)| w * h(r)).sum()
    }

    /// Marginal survival `1 - G(x)` and density `g(x)`.
    pub fn marginal_sf_pdf(&self, x: f64) -> (f64, f64) {
        if x < 0.0 {
            let (s, g) = self.marginal_sf_pdf(-x);
            return (1.0 - s, g);
        }
        let mut s = 0.0;
        let mut g = 0.0;
        for j in 0..self.r.len() {
            let z = x * self.inv_r[j];
            s += self.w[j] * norm_sf(z);
            g += self.w[j] * norm_pdf(z) * self.inv_r[j];
        }
        (s, g)
    }

    pub fn marginal_cdf(&self, x: f64) -> f64 {
        1.0 - self.marginal_sf_pdf(x).0
    }

    pub fn marginal_pdf(&self, x: f64) -> f64 {
        self.marginal_sf_pdf(x).1
    }

    /// `ln g_D(x)` for the joint density, given the quadratic form `q` of `x`
    /// and the Gaussian log-normaliser `c`.
    pub fn ln_density(&self, c: f64, q: f64, d: f64) -> f64 {
        let mut m = f64::NEG_INFINITY;
        let terms: Vec<f64> = (0..self.r.len())
            .map(|j| {
                let ir = self.inv_r[j];
                let t = self.ln_w[j] - 0.5 * q * ir * ir - d * self.ln_r[j];
                if t > m {
                    m = t;
                }
                t
            })
            .collect();
        if m == f64::NEG_INFINITY {
            return m;
        }
        let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
        c + m + s.ln()
    }

    /// `G⁻¹(p)` under the rule.
    pub fn marginal_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("probability {p} outside (0, 1)")));
        }
        if p < 0.5 {
            Ok(-self.marginal_quantile_upper(p)?)
        } else {
            self.marginal_quantile_upper(1.0 - p)
        }
    }

    /// `x >= 0` with `1 - G(x) = q`, `q <= 1/2`, by safeguarded Newton on
    /// `log(1 - G)`.
    pub fn marginal_quantile_upper(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 0.5) {
            if q > 0.5 && q < 1.0 {
                return Ok(-self.marginal_quantile_upper(1.0 - q)?);
            }
            return Err(Error::InvalidParameter(format!("tail probability {q} outside (0, 1)")));
        }
        if q == 0.5 {
            return Ok(0.0);
        }
        let lq = q.ln();
        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        let mut x = (norm_isf(q) * self.median).max(1e-3);
        for _ in 0..200 {
            let (s, g) = self.marginal_sf_pdf(x);
            let f = if s > 0.0 { s.ln() - lq } else { f64::NEG_INFINITY };
            if f > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if f == f64::NEG_INFINITY {
                x = 0.5 * (lo + hi);
                continue;
            }
            // d/dx log S = -g/S
            let step = if g > 0.0 { f * s / g } else { f64::INFINITY };
            let mut next = x + step;
            if !(next > lo && next < hi) {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(lo) };
            }
            if (next - x).abs() <= 1e-13 * x.abs().max(1e-300) {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::RootBracket(format!("rule quantile did not converge at q = {q}")))
    }
}
