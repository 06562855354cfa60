//! Positive scale variables `R` for the mixture `X = R W`.
//!
//! Every law exposes its distribution function, survival function, density,
//! lower and upper quantiles, an inverse-transform sampler and its tail class.

use crate::error::{Error, Result};
use crate::roots::{brent, expand_upper};
use crate::special::{gamma_p, gamma_q, inv_gamma_p, inv_gamma_q, ln_gamma};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Scale-variable families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RadialLaw {
    /// Point mass at `r0`: Gaussian copula.
    Dirac { r0: f64 },
    /// `R = sqrt(df / V)`, `V ~ χ²(df)`: Student-t copula.
    Student { df: f64 },
    /// `F(r) = 1 - exp(-r²/2)`: Laplace fields.
    Rayleigh,
    /// `F(r) = 1 - r^{-γ}`, `r >= 1`: slash fields.
    ParetoSlash { gamma: f64 },
    /// Generalized Pareto scale (Model 1).
    Gpd { xi: f64 },
    /// `F(r) = 1 - exp{-γ (r^β - 1)/β}`, `r >= 1` (Model 2).
    ExtWeibull { beta: f64, gamma: f64 },
    /// `F(r) = 1 - φ(r★ r)`, `φ(y) = y^β exp{-(y^β - 1)/β}`, `r >= 1` (Model 3).
    BoxCox { beta: f64 },
}

/// Upper-tail behaviour of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailClass {
    /// `1 - F(r) ~ α r^γ exp(-δ r^β)`.
    WeibullType { alpha: f64, beta: f64, gamma: f64, delta: f64 },
    /// `1 - F(r)` regularly varying with index `-γ`.
    RegularlyVarying { gamma: f64 },
    /// Finite upper endpoint.
    Bounded { r_star: f64 },
}

/// Below this `|β|` the Model 2 expressions switch to their series in `β`.
const BETA_EPS: f64 = 1e-10;

/// `(r^β - 1)/β`, continuous at `β = 0`.
#[inline]
fn box_cox_log(ln_r: f64, beta: f64) -> f64 {
    if beta.abs() < BETA_EPS {
        ln_r * (1.0 + 0.5 * beta * ln_r)
    } else {
        (beta * ln_r).exp_m1() / beta
    }
}

impl RadialLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            RadialLaw::Dirac { r0 } if !(r0 > 0.0 && r0.is_finite()) => bad(format!("Dirac r0 must be positive, got {r0}")),
            RadialLaw::Student { df } if !(df > 0.0 && df.is_finite()) => bad(format!("df must be positive, got {df}")),
            RadialLaw::ParetoSlash { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("slash index must be positive, got {gamma}"))
            }
            RadialLaw::Gpd { xi } if !xi.is_finite() => bad(format!("xi must be finite, got {xi}")),
            RadialLaw::ExtWeibull { beta, gamma } if !(beta >= 0.0 && beta.is_finite() && gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("Model 2 needs beta >= 0 and gamma > 0, got beta={beta}, gamma={gamma}"))
            }
            RadialLaw::BoxCox { beta } if !beta.is_finite() => bad(format!("Model 3 beta must be finite, got {beta}")),
            _ => Ok(()),
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, RadialLaw::Dirac { .. })
    }

    /// Closed support `[lo, hi]` (with `hi = ∞` for unbounded laws).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            RadialLaw::Dirac { r0 } => (r0, r0),
            RadialLaw::Student { .. } | RadialLaw::Rayleigh => (0.0, f64::INFINITY),
            RadialLaw::ParetoSlash { .. } | RadialLaw::ExtWeibull { .. } | RadialLaw::BoxCox { .. } => (1.0, f64::INFINITY),
            RadialLaw::Gpd { xi } => (0.0, if xi < 0.0 { -1.0 / xi } else { f64::INFINITY }),
        }
    }

    /// `Pr(R <= r)`.
    pub fn cdf(&self, r: f64) -> f64 {
        if r.is_nan() {
            return f64::NAN;
        }
        let (lo, hi) = self.support();
        if let RadialLaw::Dirac { r0 } = *self {
            return if r >= r0 { 1.0 } else { 0.0 };
        }
        if r <= lo {
            return 0.0;
        }
        if r >= hi {
            return 1.0;
        }
        match *self {
            RadialLaw::Student { df } => gamma_q(0.5 * df, 0.5 * df / (r * r)),
            RadialLaw::Rayleigh => -(-0.5 * r * r).exp_m1(),
            _ => -self.ln_sf(r).exp_m1(),
        }
    }

    /// `Pr(R > r)`, accurate in the upper tail.
    pub fn sf(&self, r: f64) -> f64 {
        if r.is_nan() {
            return f64::NAN;
        }
        if let RadialLaw::Dirac { r0 } = *self {
            return if r >= r0 { 0.0 } else { 1.0 };
        }
        let (lo, hi) = self.support();
        if r <= lo {
            return 1.0;
        }
        if r >= hi {
            return 0.0;
        }
        match *self {
            RadialLaw::Student { df } => gamma_p(0.5 * df, 0.5 * df / (r * r)),
            _ => self.ln_sf(r).exp(),
        }
    }

    /// `ln Pr(R > r)` inside the support.
    pub fn ln_sf(&self, r: f64) -> f64 {
        let (lo, hi) = self.support();
        if r <= lo {
            return 0.0;
        }
        if r >= hi {
            return f64::NEG_INFINITY;
        }
        match *self {
            RadialLaw::Dirac { .. } => f64::NEG_INFINITY,
            RadialLaw::Student { .. } => self.sf(r).ln(),
            RadialLaw::Rayleigh => -0.5 * r * r,
            RadialLaw::ParetoSlash { gamma } => -gamma * r.ln(),
            RadialLaw::Gpd { xi } => {
                if xi == 0.0 {
                    -r
                } else {
                    -(xi * r).ln_1p() / xi
                }
            }
            RadialLaw::ExtWeibull { beta, gamma } => -gamma * box_cox_log(r.ln(), beta),
            RadialLaw::BoxCox { beta } => {
                if beta == 0.0 {
                    -r.ln()
                } else {
                    let y = model3_support_constant(beta) * r;
                    let t = y.powf(beta);
                    beta * y.ln() - (t - 1.0) / beta
                }
            }
        }
    }

    /// Density; errors for the point mass.
    pub fn pdf(&self, r: f64) -> Result<f64> {
        if self.is_dirac() {
            return Err(Error::InvalidParameter("the Dirac law has no density".into()));
        }
        Ok(self.ln_pdf(r).exp())
    }

    /// Log density (`-inf` outside the support, NaN for the point mass).
    pub fn ln_pdf(&self, r: f64) -> f64 {
        let (lo, hi) = self.support();
        if self.is_dirac() {
            return f64::NAN;
        }
        if !(r > lo || (r == lo && lo > 0.0)) || r >= hi {
            return f64::NEG_INFINITY;
        }
        match *self {
            RadialLaw::Dirac { .. } => f64::NAN,
            RadialLaw::Student { df } => {
                let a = 0.5 * df;
                let x = a / (r * r);
                std::f64::consts::LN_2 + a * x.ln() - x - ln_gamma(a) - r.ln()
            }
            RadialLaw::Rayleigh => r.ln() - 0.5 * r * r,
            RadialLaw::ParetoSlash { gamma } => gamma.ln() - (gamma + 1.0) * r.ln(),
            RadialLaw::Gpd { xi } => {
                if xi == 0.0 {
                    -r
                } else {
                    -(1.0 / xi + 1.0) * (xi * r).ln_1p()
                }
            }
            RadialLaw::ExtWeibull { beta, gamma } => {
                let lr = r.ln();
                gamma.ln() + (beta - 1.0) * lr - gamma * box_cox_log(lr, beta)
            }
            RadialLaw::BoxCox { beta } => {
                if beta == 0.0 {
                    -2.0 * r.ln()
                } else {
                    // f(r) = φ(y) (y^β - β) / r with y = r★ r
                    let y = model3_support_constant(beta) * r;
                    let t = y.powf(beta);
                    let ln_phi = beta * y.ln() - (t - 1.0) / beta;
                    ln_phi + (t - beta).ln() - r.ln()
                }
            }
        }
    }

    /// Generalized inverse `inf{r : F(r) >= p}`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
        Ok(self.quantile_unchecked(p))
    }

    /// `r` with `Pr(R > r) = q`, accurate for `q` near zero.
    pub fn quantile_upper(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("probability {q} outside [0, 1]")));
        }
        Ok(self.quantile_upper_unchecked(q))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let (lo, hi) = self.support();
        if let RadialLaw::Dirac { r0 } = *self {
            return r0;
        }
        if p <= 0.0 {
            return lo;
        }
        if p >= 1.0 {
            return hi;
        }
        match *self {
            RadialLaw::Student { df } => {
                let a = 0.5 * df;
                let x = if p <= 0.5 { inv_gamma_q(a, p) } else { inv_gamma_p(a, 1.0 - p) };
                (a / x).sqrt()
            }
            // E = -ln(1 - p) without cancellation
            _ => self.from_exponential(-(-p).ln_1p()),
        }
    }

    pub(crate) fn quantile_upper_unchecked(&self, q: f64) -> f64 {
        let (lo, hi) = self.support();
        if let RadialLaw::Dirac { r0 } = *self {
            return r0;
        }
        if q >= 1.0 {
            return lo;
        }
        if q <= 0.0 {
            return hi;
        }
        match *self {
            RadialLaw::Student { df } => {
                let a = 0.5 * df;
                let x = if q <= 0.5 { inv_gamma_p(a, q) } else { inv_gamma_q(a, 1.0 - q) };
                (a / x).sqrt()
            }
            _ => self.from_exponential(-q.ln()),
        }
    }

    /// Solves `-ln Pr(R > r) = e`.
    fn from_exponential(&self, e: f64) -> f64 {
        match *self {
            RadialLaw::Rayleigh => (2.0 * e).sqrt(),
            RadialLaw::ParetoSlash { gamma } => (e / gamma).exp(),
            RadialLaw::Gpd { xi } => {
                if xi == 0.0 {
                    e
                } else {
                    (xi * e).exp_m1() / xi
                }
            }
            RadialLaw::ExtWeibull { beta, gamma } => {
                if beta < BETA_EPS {
                    (e / gamma).exp()
                } else {
                    ((beta * e / gamma).ln_1p() / beta).exp()
                }
            }
            RadialLaw::BoxCox { beta } => model3_from_exponential(beta, e),
            RadialLaw::Dirac { r0 } => r0,
            RadialLaw::Student { .. } => unreachable!("handled by the gamma inverse"),
        }
    }

    /// One inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        // u in [0, 1); 1 - u in (0, 1]
        self.quantile_upper_unchecked(1.0 - u)
    }

    /// `n` draws from a seeded stream.
    pub fn sample_n(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }

    pub fn tail_class(&self) -> TailClass {
        match *self {
            RadialLaw::Dirac { r0 } => TailClass::Bounded { r_star: r0 },
            RadialLaw::Student { df } => TailClass::RegularlyVarying { gamma: df },
            RadialLaw::Rayleigh => TailClass::WeibullType { alpha: 1.0, beta: 2.0, gamma: 0.0, delta: 0.5 },
            RadialLaw::ParetoSlash { gamma } => TailClass::RegularlyVarying { gamma },
            RadialLaw::Gpd { xi } => {
                if xi > 0.0 {
                    TailClass::RegularlyVarying { gamma: 1.0 / xi }
                } else if xi == 0.0 {
                    TailClass::WeibullType { alpha: 1.0, beta: 1.0, gamma: 0.0, delta: 1.0 }
                } else {
                    TailClass::Bounded { r_star: -1.0 / xi }
                }
            }
            // 1 - F(r) = e^{γ/β} exp{-(γ/β) r^β}
            RadialLaw::ExtWeibull { beta, gamma } => {
                if beta > 0.0 {
                    TailClass::WeibullType { alpha: (gamma / beta).exp(), beta, gamma: 0.0, delta: gamma / beta }
                } else {
                    TailClass::RegularlyVarying { gamma }
                }
            }
            // 1 - F(r) = r★^β e^{1/β} r^β exp{-(r★^β/β) r^β}
            RadialLaw::BoxCox { beta } => {
                if beta > 0.0 {
                    let t = model3_support_constant(beta).powf(beta);
                    TailClass::WeibullType { alpha: t * (1.0 / beta).exp(), beta, gamma: beta, delta: t / beta }
                } else if beta == 0.0 {
                    TailClass::RegularlyVarying { gamma: 1.0 }
                } else {
                    TailClass::RegularlyVarying { gamma: -beta }
                }
            }
        }
    }

    /// Short family tag used in file formats and the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            RadialLaw::Dirac { .. } => "dirac",
            RadialLaw::Student { .. } => "student",
            RadialLaw::Rayleigh => "rayleigh",
            RadialLaw::ParetoSlash { .. } => "slash",
            RadialLaw::Gpd { .. } => "gpd",
            RadialLaw::ExtWeibull { .. } => "model2",
            RadialLaw::BoxCox { .. } => "model3",
        }
    }
}

/// `r★_β = sup{r : r^β exp{-(r^β - 1)/β} = 1}`.
///
/// With `t = r^β` the equation is `t e^{-(t-1)/β} = 1`. The left side peaks at
/// `t = β`, so for `β <= 1` (and all `β < 0`) the largest root is `t = 1`;
/// otherwise it is the root beyond `t = β`.
pub fn model3_support_constant(beta: f64) -> f64 {
    if beta <= 1.0 {
        return 1.0;
    }
    thread_local! {
        static LAST: std::cell::Cell<(u64, f64)> = const { std::cell::Cell::new((u64::MAX, 0.0)) };
    }
    let key = beta.to_bits();
    let (k, v) = LAST.with(|c| c.get());
    if k == key {
        return v;
    }
    let v = model3_support_root(beta);
    LAST.with(|c| c.set((key, v)));
    v
}

fn model3_support_root(beta: f64) -> f64 {
    let g = |t: f64| t.ln() - (t - 1.0) / beta;
    let hi = expand_upper(g, beta, 2.0 * beta, 200).unwrap_or(f64::MAX);
    let t = brent(g, beta, hi, 1e-14, 300).unwrap_or(beta);
    t.powf(1.0 / beta)
}

/// Model 3 upper quantile: solves `-ln φ(r★ r) = e` for `r >= 1`.
fn model3_from_exponential(beta: f64, e: f64) -> f64 {
    if beta == 0.0 {
        return e.exp();
    }
    let rs = model3_support_constant(beta);
    let t0 = rs.powf(beta);
    // with u = ln t: g(u) = -u + (e^u - 1)/β - e, monotone on the support branch
    let g = |u: f64| -u + (u.exp() - 1.0) / beta - e;
    let u = if beta > 0.0 {
        let u_lo = t0.ln();
        match expand_upper(g, u_lo, u_lo + 1.0, 200).and_then(|hi| brent(g, u_lo, hi, 1e-15, 300)) {
            Ok(u) => u,
            Err(_) => return f64::INFINITY,
        }
    } else {
        // t ∈ (0, 1]; g is decreasing with g(0) = -e <= 0 and g(-e - 1/|β| - 1) > 0
        let lo = -e + 1.0 / beta - 1.0;
        match brent(g, lo.min(-1e-300), 0.0, 1e-15, 300) {
            Ok(u) => u,
            Err(_) => return f64::INFINITY,
        }
    };
    (u / beta).exp() / rs
}
