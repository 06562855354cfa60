//! Finite-level and limiting tail-dependence coefficients.
//!
//! `χ(u) = 2 - log C(u,u) / log u` and `χ̄(u) = 2 log(1-u) / log C̄(u,u) - 1`,
//! with `C̄(u,u) = 1 - 2u + C(u,u)` the joint survival on the diagonal.

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::quadrature::QuadratureConfig;
use crate::radial::TailClass;
use crate::special::student_t_sf;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Empirical,
    Parametric,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Empirical => "empirical",
            Estimator::Parametric => "parametric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMeasure {
    Chi,
    Chibar,
    /// `Pr(U_1 > u | U_2 > u)`.
    CondExceed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub measure: TailMeasure,
    pub estimator: Estimator,
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

impl TailCurve {
    pub fn new(measure: TailMeasure, estimator: Estimator, levels: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Self { measure, estimator, levels, values, lo: None, hi: None };
        c.validate()?;
        Ok(c)
    }

    pub fn with_band(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        self.lo = Some(lo);
        self.hi = Some(hi);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.levels.len();
        if self.values.len() != n {
            return Err(Error::InvalidData("levels and values differ in length".into()));
        }
        if self.levels.iter().any(|u| !(0.0..1.0).contains(u)) || self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidData("levels must increase strictly inside [0, 1)".into()));
        }
        match (&self.lo, &self.hi) {
            (None, None) => {}
            (Some(lo), Some(hi)) => {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::InvalidData("band length differs from the grid".into()));
                }
                for i in 0..n {
                    let v = self.values[i];
                    if v.is_finite() && !(lo[i] <= v + 1e-12 && v <= hi[i] + 1e-12) {
                        return Err(Error::InvalidData(format!("band does not contain the point at u = {}", self.levels[i])));
                    }
                }
            }
            _ => return Err(Error::InvalidData("band needs both bounds".into())),
        }
        Ok(())
    }

    /// CSV with columns `u,value,lo,hi,estimator`; missing bounds are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["u", "value", "lo", "hi", "estimator"])?;
        for i in 0..self.levels.len() {
            let b = |v: &Option<Vec<f64>>| v.as_ref().map(|x| x[i].to_string()).unwrap_or_default();
            wr.write_record([
                self.levels[i].to_string(),
                self.values[i].to_string(),
                b(&self.lo),
                b(&self.hi),
                self.estimator.name().to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Diagonal copula probabilities at level `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalProbs {
    pub u: f64,
    /// `C(u, u)`.
    pub lower: f64,
    /// `C̄(u, u)`.
    pub upper: f64,
}

/// Quadrature setting for tail work: tiny absolute floor so far-tail
/// probabilities keep their relative accuracy.
pub fn tail_quadrature() -> QuadratureConfig {
    QuadratureConfig { rel_tol: 1e-11, abs_tol: 1e-300, max_subdivisions: 600 }
}

fn require_pair(model: &MixtureModel) -> Result<MixtureModel> {
    if model.dim() != 2 {
        return Err(Error::InvalidParameter(format!("tail coefficients need a pair of sites, got {}", model.dim())));
    }
    model.clone().with_quadrature(tail_quadrature())
}

fn check_level(u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!("level {u} outside (0, 1)")));
    }
    Ok(())
}

/// `C(u,u)` and `C̄(u,u)`; the joint survival is integrated directly from
/// upper-orthant Gaussian probabilities, never as a difference.
pub fn diagonal_probs(model: &MixtureModel, u: f64) -> Result<DiagonalProbs> {
    check_level(u)?;
    let m = require_pair(model)?;
    let x = m.marginal_quantile_upper(0, 1.0 - u)?;
    let upper = m.joint_cdf(&[-x, -x])?;
    let lower = m.joint_cdf(&[x, x])?;
    Ok(DiagonalProbs { u, lower, upper })
}

fn survival(model: &MixtureModel, u: f64) -> Result<f64> {
    let d = diagonal_probs(model, u)?;
    if !(d.upper > 0.0) {
        return Err(Error::Underflow(format!("joint survival underflows at u = {u}")));
    }
    Ok(d.upper)
}

/// `χ(u)` through the survival identity: `log C = log1p(C̄ - 2(1-u))`.
pub fn chi_u(model: &MixtureModel, u: f64) -> Result<f64> {
    let cbar = survival(model, u)?;
    let q = 1.0 - u;
    Ok(2.0 - (cbar - 2.0 * q).ln_1p() / (-q).ln_1p())
}

/// `χ(u)` from the lower-orthant value `C(u,u)` directly.
pub fn chi_u_from_cdf(model: &MixtureModel, u: f64) -> Result<f64> {
    let d = diagonal_probs(model, u)?;
    Ok(2.0 - d.lower.ln() / u.ln())
}

pub fn chibar_u(model: &MixtureModel, u: f64) -> Result<f64> {
    let cbar = survival(model, u)?;
    Ok(2.0 * (1.0 - u).ln() / cbar.ln() - 1.0)
}

/// `Pr(U_1 > u | U_2 > u) = C̄(u,u)/(1-u)`.
pub fn cond_exceed_prob(model: &MixtureModel, u: f64) -> Result<f64> {
    Ok(survival(model, u)? / (1.0 - u))
}

/// Parametric curve of one measure on a grid of levels.
pub fn parametric_curve(model: &MixtureModel, measure: TailMeasure, levels: &[f64]) -> Result<TailCurve> {
    let values = levels
        .iter()
        .map(|&u| match measure {
            TailMeasure::Chi => chi_u(model, u),
            TailMeasure::Chibar => chibar_u(model, u),
            TailMeasure::CondExceed => cond_exceed_prob(model, u),
        })
        .collect::<Result<Vec<_>>>()?;
    TailCurve::new(measure, Estimator::Parametric, levels.to_vec(), values)
}

/// Plug-in tail coefficients from pseudo-uniform pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTail {
    pub u: f64,
    /// Complete pairs used.
    pub n: usize,
    pub joint_below: usize,
    pub joint_above: usize,
    pub chi: f64,
    pub chi_se: f64,
    /// `None` when no pair exceeds `u` jointly.
    pub chibar: Option<f64>,
    pub chibar_se: Option<f64>,
    pub cond_exceed: f64,
    pub cond_exceed_se: f64,
    /// Plug-in value outside the attainable range (finite-sample artefact).
    pub out_of_range: bool,
}

/// Empirical `χ(u)`, `χ̄(u)` and `Pr(U_1 > u | U_2 > u)` with delta-method
/// binomial standard errors. Pairs with a missing member are dropped.
pub fn empirical_chi_u(pairs: &[(Option<f64>, Option<f64>)], u: f64) -> Result<EmpiricalTail> {
    check_level(u)?;
    let complete: Vec<(f64, f64)> = pairs.iter().filter_map(|&(a, b)| Some((a?, b?))).collect();
    let n = complete.len();
    if n == 0 {
        return Err(Error::InvalidData("no complete pairs".into()));
    }
    let nf = n as f64;
    let below = complete.iter().filter(|(a, b)| *a <= u && *b <= u).count();
    let above = complete.iter().filter(|(a, b)| *a > u && *b > u).count();
    let c = below as f64 / nf;
    let cbar = above as f64 / nf;
    let lu = u.ln();
    let chi = 2.0 - c.ln() / lu;
    let chi_se = if below > 0 { (c * (1.0 - c) / nf).sqrt() / (c * lu.abs()) } else { f64::INFINITY };
    let lq = (1.0 - u).ln();
    let (chibar, chibar_se) = if above > 0 && above < n {
        let l = cbar.ln();
        let v = 2.0 * lq / l - 1.0;
        let se = (cbar * (1.0 - cbar) / nf).sqrt() * (2.0 * lq / (cbar * l * l)).abs();
        (Some(v), Some(se))
    } else if above == n {
        (None, None)
    } else {
        (None, None)
    };
    let cond = cbar / (1.0 - u);
    let cond_se = (cbar * (1.0 - cbar) / nf).sqrt() / (1.0 - u);
    let out_of_range = !(-1e-12..=1.0 + 1e-12).contains(&chi)
        || chibar.map(|v| !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&v)).unwrap_or(false);
    Ok(EmpiricalTail {
        u,
        n,
        joint_below: below,
        joint_above: above,
        chi,
        chi_se,
        chibar,
        chibar_se,
        cond_exceed: cond,
        cond_exceed_se: cond_se,
        out_of_range,
    })
}

/// Empirical curve with normal-approximation 95% bands.
pub fn empirical_curve(pairs: &[(Option<f64>, Option<f64>)], measure: TailMeasure, levels: &[f64]) -> Result<TailCurve> {
    let mut values = Vec::with_capacity(levels.len());
    let mut lo = Vec::with_capacity(levels.len());
    let mut hi = Vec::with_capacity(levels.len());
    for &u in levels {
        let e = empirical_chi_u(pairs, u)?;
        let (v, se) = match measure {
            TailMeasure::Chi => (e.chi, e.chi_se),
            TailMeasure::Chibar => (e.chibar.unwrap_or(f64::NAN), e.chibar_se.unwrap_or(f64::NAN)),
            TailMeasure::CondExceed => (e.cond_exceed, e.cond_exceed_se),
        };
        values.push(v);
        lo.push(v - 1.96 * se);
        hi.push(v + 1.96 * se);
    }
    TailCurve::new(measure, Estimator::Empirical, levels.to_vec(), values)?.with_band(lo, hi)
}

/// `χ = 2[1 - T{(1+γ)^{1/2}(1-ρ)(1-ρ²)^{-1/2}; γ+1}]` for a regularly
/// varying scale with index `γ`.
pub fn chi_limit_regvar(gamma: f64, rho: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(rho > -1.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("need γ > 0 and ρ in (-1, 1), got ({gamma}, {rho})")));
    }
    let arg = (1.0 + gamma).sqrt() * ((1.0 - rho) / (1.0 + rho)).sqrt();
    Ok(2.0 * student_t_sf(arg, gamma + 1.0))
}

/// `χ̄ = 2{(1+ρ)/2}^{β/(β+2)} - 1`; infinite `β` gives the bounded-scale value `ρ`.
pub fn chibar_limit_weibull(beta: f64, rho: f64) -> Result<f64> {
    if !(beta > 0.0) || !(rho > -1.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("need β > 0 and ρ in (-1, 1), got ({beta}, {rho})")));
    }
    if beta == f64::INFINITY {
        return Ok(rho);
    }
    Ok(2.0 * (0.5 * (1.0 + rho)).powf(beta / (beta + 2.0)) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Applicability {
    WeibullType,
    RegularlyVarying,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailAsymptote {
    pub eta: f64,
    pub chi: f64,
    pub chibar: f64,
    /// Exponent of `log x` in `C̄(1-1/x, 1-1/x) ~ K (log x)^{K2} x^{-1/η}`.
    pub k2: Option<f64>,
    pub k: Option<f64>,
    pub kind: Applicability,
}

/// Tail parameters of `R R_W` for a Weibull-type `R`, where `R_W` is the
/// Gaussian radius with `(α, β, γ, δ) = (1, 2, 0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductTail {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

pub fn product_tail(alpha: f64, beta: f64, gamma: f64, delta: f64) -> ProductTail {
    let a = (beta * delta).powf(1.0 / (2.0 + beta));
    let e = beta / (2.0 + beta);
    ProductTail {
        alpha: (2.0 * PI / (2.0 + beta)).sqrt() * a.powf(1.0 - gamma) * alpha,
        beta: 2.0 * beta / (2.0 + beta),
        gamma: (2.0 * gamma + beta) / (2.0 + beta),
        delta: delta.powf(2.0 / (2.0 + beta)) * 2f64.powf(-e) * ((2.0 / beta).powf(e) + (beta / 2.0).powf(2.0 / (2.0 + beta))),
    }
}

/// Joint-tail constants of an elliptical pair whose radius has the
/// Weibull-type tail `(α, β, γ, δ)`: `(η, K1, K2)`.
fn joint_tail_constants(alpha: f64, beta: f64, gamma: f64, delta: f64, rho: f64) -> (f64, f64, f64) {
    let eta = (0.5 * (1.0 + rho)).powf(0.5 * beta);
    let k1 = alpha.recip()
        * (1.0 - rho).powi(-2)
        * (2.0 / (1.0 + rho)).powf(0.5 * gamma - 0.5 * beta + 1.0)
        * (1.0 - rho * rho).powf(1.5)
        * delta.powf((1.0 / eta - 1.0) * gamma / beta)
        * (alpha * alpha / (2.0 * PI * beta)).powf(1.0 - 0.5 / eta);
    let k2 = (1.0 - 1.0 / eta) * gamma / beta + 0.5 / eta - 1.0;
    (eta, k1, k2)
}

/// Asymptotic joint tail of the mixture pair with correlation `ρ`.
pub fn weibull_tail_asymptote(alpha: f64, beta: f64, gamma: f64, delta: f64, rho: f64) -> Result<TailAsymptote> {
    if !(alpha > 0.0 && beta > 0.0 && delta > 0.0 && gamma.is_finite()) || !(rho > -1.0 && rho < 1.0) {
        return Err(Error::InvalidParameter("invalid Weibull-type tail or correlation".into()));
    }
    let s = product_tail(alpha, beta, gamma, delta);
    let (eta, k, k2) = joint_tail_constants(s.alpha, s.beta, s.gamma, s.delta, rho);
    Ok(TailAsymptote { eta, chi: 0.0, chibar: 2.0 * eta - 1.0, k2: Some(k2), k: Some(k), kind: Applicability::WeibullType })
}

/// Limits for any radial tail class.
pub fn tail_asymptote(tail: &TailClass, rho: f64) -> Result<TailAsymptote> {
    match *tail {
        TailClass::WeibullType { alpha, beta, gamma, delta } => weibull_tail_asymptote(alpha, beta, gamma, delta, rho),
        TailClass::RegularlyVarying { gamma } => Ok(TailAsymptote {
            eta: 1.0,
            chi: chi_limit_regvar(gamma, rho)?,
            chibar: 1.0,
            k2: None,
            k: None,
            kind: Applicability::RegularlyVarying,
        }),
        TailClass::Bounded { .. } => {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(Error::InvalidParameter(format!("ρ = {rho} outside (-1, 1)")));
            }
            Ok(TailAsymptote {
                eta: 0.5 * (1.0 + rho),
                chi: 0.0,
                chibar: rho,
                k2: None,
                k: None,
                kind: Applicability::Bounded,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialLaw;
    use proptest::prelude::*;

    fn pair(law: RadialLaw, rho: f64) -> MixtureModel {
        MixtureModel::bivariate(law, rho).unwrap()
    }

    #[test]
    fn independence_copula_values() {
        let m = pair(RadialLaw::Dirac { r0: 1.0 }, 0.0);
        for &u in &[0.9, 0.99, 0.999] {
            assert!(chi_u(&m, u).unwrap().abs() < 1e-10);
            assert!(chibar_u(&m, u).unwrap().abs() < 1e-10);
            assert!((cond_exceed_prob(&m, u).unwrap() - (1.0 - u)).abs() < 1e-12);
        }
    }

    #[test]
    fn comonotone_diagonal_gives_one() {
        for n in [999usize, 99_999] {
            let data: Vec<_> = (1..=n).map(|i| {
                let v = i as f64 / (n + 1) as f64;
                (Some(v), Some(v))
            }).collect();
            let e = empirical_chi_u(&data, 0.9).unwrap();
            assert!((e.chi - 1.0).abs() < 10.0 / n as f64, "{}", e.chi);
        }
    }

    #[test]
    fn four_point_hand_count() {
        let data = [(0.2, 0.3), (0.96, 0.97), (0.5, 0.99), (0.98, 0.6)].map(|(a, b)| (Some(a), Some(b)));
        let e = empirical_chi_u(&data, 0.95).unwrap();
        assert_eq!(e.joint_above, 1);
        let expected = 2.0 * 0.05f64.ln() / 0.25f64.ln() - 1.0;
        assert!((e.chibar.unwrap() - expected).abs() < 1e-12);
        assert!((expected - 3.3219).abs() < 1e-4);
        assert!(e.out_of_range);
    }

    #[test]
    fn missing_members_are_dropped() {
        let data = [(Some(0.99), None), (Some(0.2), Some(0.3)), (None, Some(0.97))];
        let e = empirical_chi_u(&data, 0.95).unwrap();
        assert_eq!(e.n, 1);
        assert!(e.chibar.is_none());
    }

    #[test]
    fn independent_uniforms_have_small_chi() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let data: Vec<_> = (0..100_000).map(|_| (Some(rng.gen::<f64>()), Some(rng.gen::<f64>()))).collect();
        let e = empirical_chi_u(&data, 0.95).unwrap();
        // |χ̂| is about 1/20 of the joint-below frequency error here
        assert!(e.chi.abs() < 0.03, "{}", e.chi);
    }

    #[test]
    fn limit_examples() {
        assert!((chi_limit_regvar(1.0, 0.0).unwrap() - (1.0 - 0.5 * 2f64.sqrt())).abs() < 1e-14);
        assert!((chi_limit_regvar(1.0, 0.0).unwrap() - 0.2929).abs() < 1e-4);
        assert!((chi_limit_regvar(3.0, 1.0 - 1e-12).unwrap() - 1.0).abs() < 1e-5);
        assert!(chi_limit_regvar(1e4, 0.3).unwrap() < 1e-10);
        assert!((chibar_limit_weibull(1.0, 0.0).unwrap() - 0.5874).abs() < 1e-4);
        assert!((chibar_limit_weibull(2.0, 0.6).unwrap() - 0.7889).abs() < 1e-4);
        assert_eq!(chibar_limit_weibull(f64::INFINITY, 0.4).unwrap(), 0.4);
        let a = weibull_tail_asymptote(1.0, 2.0, 0.0, 0.5, 0.0).unwrap();
        assert!((a.eta - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((1.0 / a.eta - 1.414).abs() < 1e-3);
    }

    #[test]
    fn product_tail_of_gaussian_radii() {
        // two independent Rayleigh radii: R1 R2 has density r K0(r), tail ~ sqrt(π r/2) e^{-r}
        let s = product_tail(1.0, 2.0, 0.0, 0.5);
        assert!((s.beta - 1.0).abs() < 1e-15);
        assert!((s.gamma - 0.5).abs() < 1e-15);
        assert!((s.delta - 1.0).abs() < 1e-14);
        assert!((s.alpha - (PI / 2.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn regularly_varying_limit_is_reached() {
        // Student radial of index ν: χ at a far level against the closed form
        let m = pair(RadialLaw::Student { df: 1.0 }, 0.3);
        let v = chi_u(&m, 1.0 - 1e-6).unwrap();
        let e = chi_limit_regvar(1.0, 0.3).unwrap();
        assert!((v - e).abs() < 0.02, "{v} vs {e}");
    }

    #[test]
    fn gaussian_trend() {
        let u = 1.0 - 1e-5;
        for rho in [0.0, 0.2] {
            let m = pair(RadialLaw::Dirac { r0: 1.0 }, rho);
            assert!(chi_u(&m, u).unwrap().abs() < 0.05);
            assert!((chibar_u(&m, u).unwrap() - rho).abs() < 0.05);
        }
        // stronger correlation converges only logarithmically; frozen values
        // from a one-dimensional conditioning integral of the bivariate normal
        for (rho, chi, chibar) in [(0.5, 0.010154019056601404, 0.43001349189360294), (0.8, 0.1363376034495445, 0.7049255631206324)] {
            let m = pair(RadialLaw::Dirac { r0: 1.0 }, rho);
            assert!((chi_u(&m, u).unwrap() - chi).abs() < 1e-9);
            let cb = chibar_u(&m, u).unwrap();
            assert!((cb - chibar).abs() < 1e-9);
            assert!(cb < rho && cb > chibar_u(&m, 0.99).unwrap());
        }
    }

    #[test]
    fn survival_identity_agrees_with_direct_cdf() {
        for law in [RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 }, RadialLaw::Student { df: 3.0 }] {
            let m = pair(law, 0.5);
            for &u in &[0.9, 0.95, 0.99] {
                let a = chi_u(&m, u).unwrap();
                let b = chi_u_from_cdf(&m, u).unwrap();
                assert!((a - b).abs() < 1e-10, "{law:?} u={u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn model2_curve_shape() {
        // distance 0.5 at unit range and smoothness
        let rho = (-0.5f64).exp();
        let m = pair(RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 }, rho);
        let levels: Vec<f64> = (0..10).map(|k| 0.9 + 0.0099 * k as f64).collect();
        let chi = parametric_curve(&m, TailMeasure::Chi, &levels).unwrap();
        assert!(chi.values.windows(2).all(|w| w[1] < w[0]), "{:?}", chi.values);
        let lim = chibar_limit_weibull(1.0, rho).unwrap();
        let cb = chibar_u(&m, 1.0 - 1e-8).unwrap();
        assert!(cb > 0.0 && (cb - lim).abs() < 0.15, "{cb} vs {lim}");
    }

    #[test]
    fn underflow_is_flagged() {
        let m = pair(RadialLaw::Dirac { r0: 1.0 }, -0.9);
        assert!(matches!(chibar_u(&m, 1.0 - 1e-15), Err(Error::Underflow(_))));
    }

    #[test]
    fn curve_csv_layout() {
        let c = TailCurve::new(TailMeasure::Chi, Estimator::Parametric, vec![0.9, 0.95], vec![0.3, 0.2]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "u,value,lo,hi,estimator\n0.9,0.3,,,parametric\n0.95,0.2,,,parametric\n");
        assert!(TailCurve::new(TailMeasure::Chi, Estimator::Parametric, vec![0.95, 0.9], vec![0.3, 0.2]).is_err());
    }

    /// Least-squares slope of `log C̄(1-1/x, 1-1/x)` on `log x` over `[10³, 10⁶]`.
    pub(crate) fn joint_tail_slope(m: &MixtureModel, points: usize) -> f64 {
        let lx: Vec<f64> = (0..points).map(|k| (3.0 + 3.0 * k as f64 / (points - 1) as f64) * 10f64.ln()).collect();
        let ly: Vec<f64> = lx.iter().map(|&l| diagonal_probs(m, 1.0 - (-l).exp()).unwrap().upper.ln()).collect();
        let n = points as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn weibull_joint_tail_slope() {
        for beta in [0.5, 1.0, 2.0] {
            for rho in [0.0, 0.5] {
                let law = RadialLaw::ExtWeibull { beta, gamma: 1.0 };
                let s = joint_tail_slope(&pair(law, rho), 7);
                let eta = tail_asymptote(&law.tail_class(), rho).unwrap().eta;
                assert!((s * eta + 1.0).abs() < 0.05, "β={beta} ρ={rho}: slope {s} vs {}", -1.0 / eta);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eta_matches_closed_form(beta in 0.05f64..20.0, rho in -0.95f64..0.95, gamma in -2.0f64..3.0, delta in 0.1f64..5.0) {
            let a = weibull_tail_asymptote(1.3, beta, gamma, delta, rho).unwrap();
            let cb = chibar_limit_weibull(beta, rho).unwrap();
            prop_assert!((2.0 * a.eta - 1.0 - cb).abs() < 1e-12);
            prop_assert!(a.k.unwrap() > 0.0);
        }
    }
}
