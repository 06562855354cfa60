//! Finite-dimensional laws of `X = R W`.
//!
//! Every quantity is a one-dimensional integral over the scale variable,
//! written on its probability scale: `r = F⁻¹(t)`, `t ∈ (0, 1)`.

mod inner;
pub mod params;
pub mod rule;

use crate::error::{Error, Result};
use crate::gaussian::matrix::{select, CovarianceBlocks, MvnDensity};
use crate::gaussian::normal::norm_sf;
use crate::gaussian::sites::{build_correlation, check_correlation, CorrelationModel, SiteSet};
use crate::quadrature::{integrate_unit, ProbSide, QuadResult, QuadratureConfig};
use crate::radial::RadialLaw;
use crate::roots::brent;
use inner::{InnerCdf, API_GENZ_POINTS};
pub(crate) use inner::trivariate_cdf;
use nalgebra::DMatrix;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

pub use params::{Family, ParamSpec, ParamVector, Transform};
pub use rule::RadialRule;

const NODE_CACHE_LIMIT: usize = 1 << 18;

/// Cache of radial quantiles at quadrature nodes, for laws whose quantile
/// needs a root search. Adaptive panels land on the same nodes across calls.
#[derive(Debug, Default)]
struct NodeCache {
    map: Mutex<HashMap<(u64, bool), f64>>,
}

#[derive(Debug, Clone)]
pub struct MixtureModel {
    radial: RadialLaw,
    correlation: Option<CorrelationModel>,
    sites: Option<SiteSet>,
    quadrature: QuadratureConfig,
    scale: f64,
    sigma: DMatrix<f64>,
    cache: Arc<NodeCache>,
}

/// Hash of a point and an index set, used to seed inner Gaussian CDFs.
pub(crate) fn point_seed(x: &[f64], idx: &[usize]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in x {
        v.to_bits().hash(&mut h);
    }
    idx.hash(&mut h);
    h.finish()
}

#[inline]
fn ratio(x: f64, r: f64) -> f64 {
    if x.is_infinite() || x == 0.0 {
        x
    } else if r == 0.0 {
        f64::INFINITY.copysign(x)
    } else {
        x / r
    }
}

impl MixtureModel {
    pub fn new(radial: RadialLaw, correlation: CorrelationModel, sites: SiteSet) -> Result<Self> {
        radial.validate()?;
        let sigma = build_correlation(&sites, &correlation)?;
        Ok(Self {
            radial,
            correlation: Some(correlation),
            sites: Some(sites),
            quadrature: QuadratureConfig::default(),
            scale: 1.0,
            sigma,
            cache: Arc::default(),
        })
    }

    /// Model with a given correlation matrix and no spatial structure.
    pub fn from_correlation_matrix(radial: RadialLaw, sigma: DMatrix<f64>) -> Result<Self> {
        radial.validate()?;
        if sigma.nrows() == 0 || sigma.nrows() != sigma.ncols() {
            return Err(Error::InvalidParameter("correlation matrix must be square and non-empty".into()));
        }
        if (0..sigma.nrows()).any(|i| (sigma[(i, i)] - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidParameter("correlation matrix needs a unit diagonal".into()));
        }
        check_correlation(&sigma)?;
        Ok(Self {
            radial,
            correlation: None,
            sites: None,
            quadrature: QuadratureConfig::default(),
            scale: 1.0,
            sigma,
            cache: Arc::default(),
        })
    }

    /// Bivariate model with correlation `rho`.
    pub fn bivariate(radial: RadialLaw, rho: f64) -> Result<Self> {
        Self::from_correlation_matrix(radial, DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
    }

    pub fn with_quadrature(mut self, cfg: QuadratureConfig) -> Result<Self> {
        if !(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be positive".into()));
        }
        self.quadrature = cfg;
        Ok(self)
    }

    /// Multiplies the scale variable by `c > 0`; the copula is unchanged.
    pub fn with_radial_scale(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("radial scale {c} must be positive")));
        }
        self.scale = c;
        Ok(self)
    }

    pub fn radial(&self) -> &RadialLaw {
        &self.radial
    }

    /// Multiplier applied to draws of the radial law.
    pub fn radial_scale(&self) -> f64 {
        self.scale
    }

    pub fn correlation(&self) -> Option<&CorrelationModel> {
        self.correlation.as_ref()
    }

    pub fn sites(&self) -> Option<&SiteSet> {
        self.sites.as_ref()
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quadrature
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Restriction to the coordinates `idx`.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() || idx.iter().any(|&i| i >= self.dim()) {
            return Err(Error::InvalidParameter("subset indices out of range".into()));
        }
        let mut m = self.clone();
        m.sigma = select(&self.sigma, idx, idx);
        m.sites = match &self.sites {
            Some(s) => Some(s.subset(idx)?),
            None => None,
        };
        Ok(m)
    }

    pub fn pair(&self, i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidParameter("a pair needs two distinct sites".into()));
        }
        self.subset(&[i, j])
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidParameter(format!("point of length {} for dimension {}", x.len(), self.dim())));
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("NaN coordinate".into()));
        }
        Ok(())
    }

    fn node(&self, p: f64, side: ProbSide) -> f64 {
        let slow = matches!(self.radial, RadialLaw::Student { .. } | RadialLaw::BoxCox { .. });
        let compute = || match side {
            ProbSide::Lower => self.radial.quantile_unchecked(p),
            ProbSide::Upper => self.radial.quantile_upper_unchecked(p),
        };
        if !slow {
            return self.scale * compute();
        }
        let key = (p.to_bits(), side == ProbSide::Upper);
        if let Some(&r) = self.cache.map.lock().unwrap().get(&key) {
            return self.scale * r;
        }
        let r = compute();
        let mut map = self.cache.map.lock().unwrap();
        if map.len() >= NODE_CACHE_LIMIT {
            map.clear();
        }
        map.insert(key, r);
        self.scale * r
    }

    /// `∫ h(r) dF(r)`, exact for a point mass.
    pub fn radial_integral<F: FnMut(f64) -> f64>(&self, mut h: F, cfg: &QuadratureConfig) -> QuadResult {
        if let RadialLaw::Dirac { r0 } = self.radial {
            return QuadResult { value: h(self.scale * r0), abs_error: 0.0, evaluations: 1, converged: true };
        }
        integrate_unit(|p, side| h(self.node(p, side)), cfg)
    }

    fn finish(&self, res: QuadResult, cfg: &QuadratureConfig) -> Result<f64> {
        if !res.value.is_finite() {
            return Err(Error::Quadrature { achieved: f64::NAN, target: cfg.rel_tol });
        }
        if !res.converged {
            let target = cfg.abs_tol.max(cfg.rel_tol * res.value.abs());
            // a miss by a small factor is rounding noise in the panel error estimate
            if res.abs_error > 10.0 * target {
                return Err(Error::Quadrature { achieved: res.abs_error, target });
            }
        }
        Ok(res.value.clamp(0.0, f64::MAX))
    }

    /// `G(x) = ∫ Φ_D(x/r; Σ) f(r) dr`.
    pub fn joint_cdf(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let inner = InnerCdf::new(x, &self.sigma, API_GENZ_POINTS, point_seed(x, &[]))?;
        if let InnerCdf::Zero = inner {
            return Ok(0.0);
        }
        let cfg = self.quadrature;
        let res = self.radial_integral(|r| inner.eval(if r > 0.0 { 1.0 / r } else { 1e300 }), &cfg);
        Ok(self.finish(res, &cfg)?.min(1.0))
    }

    /// `Pr(X > x)`; the law of `X` is symmetric, so this is `G(-x)`.
    pub fn joint_survival(&self, x: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        self.joint_cdf(&neg)
    }

    pub fn ln_joint_pdf(&self, x: &[f64]) -> Result<f64> {
        Ok(self.joint_pdf(x)?.ln())
    }

    /// `g(x) = ∫ φ_D(x/r; Σ) r^{-D} f(r) dr`.
    pub fn joint_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if x.iter().any(|v| v.is_infinite()) {
            return Ok(0.0);
        }
        let dens = MvnDensity::new(&self.sigma)?;
        let q = dens.quad_form(x);
        let d = self.dim() as f64;
        let c = dens.ln_pdf_from_quad(0.0);
        let cfg = self.quadrature;
        let res = self.radial_integral(|r| scaled_gaussian(c, q, d, r), &cfg);
        self.finish(res, &cfg)
    }

    /// `G_k(x)`; margins are identical across `k`.
    pub fn marginal_cdf(&self, _k: usize, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::InvalidParameter("NaN coordinate".into()));
        }
        if x == 0.0 {
            return Ok(0.5);
        }
        let s = self.marginal_sf(0, x.abs())?;
        Ok(if x > 0.0 { 1.0 - s } else { s })
    }

    /// `1 - G_k(x)`, accurate in the upper tail.
    pub fn marginal_sf(&self, _k: usize, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::InvalidParameter("NaN coordinate".into()));
        }
        if x == f64::INFINITY {
            return Ok(0.0);
        }
        if x == f64::NEG_INFINITY {
            return Ok(1.0);
        }
        if x < 0.0 {
            return Ok(1.0 - self.marginal_sf(0, -x)?);
        }
        let cfg = self.quadrature;
        let res = self.radial_integral(|r| norm_sf(ratio(x, r)), &cfg);
        Ok(self.finish(res, &cfg)?.min(1.0))
    }

    /// `g_k(x) = ∫ φ(x/r) r^{-1} f(r) dr`.
    pub fn marginal_pdf(&self, _k: usize, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::InvalidParameter("NaN coordinate".into()));
        }
        if x.is_infinite() {
            return Ok(0.0);
        }
        let c = crate::gaussian::normal::ln_norm_pdf(0.0);
        let q = x * x;
        let cfg = self.quadrature;
        let res = self.radial_integral(|r| scaled_gaussian(c, q, 1.0, r), &cfg);
        self.finish(res, &cfg)
    }

    /// `G_k⁻¹(p)`.
    pub fn marginal_quantile(&self, k: usize, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return match p {
                0.0 => Ok(f64::NEG_INFINITY),
                1.0 => Ok(f64::INFINITY),
                _ => Err(Error::InvalidParameter(format!("probability {p} outside (0, 1)"))),
            };
        }
        if p == 0.5 {
            return Ok(0.0);
        }
        if p < 0.5 {
            Ok(-self.marginal_quantile_upper(k, p)?)
        } else {
            self.marginal_quantile_upper(k, 1.0 - p)
        }
    }

    /// `x` with `1 - G_k(x) = q`, accurate for small `q`.
    ///
    /// The bracket starts at `[0, x0]` with `x0` the Gaussian quantile scaled
    /// by the median of `R`, and doubles its upper end until it straddles the
    /// root (at most 1100 doublings). Brent then runs on `log(1 - G_k)`.
    pub fn marginal_quantile_upper(&self, k: usize, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return match q {
                0.0 => Ok(f64::INFINITY),
                1.0 => Ok(f64::NEG_INFINITY),
                _ => Err(Error::InvalidParameter(format!("probability {q} outside (0, 1)"))),
            };
        }
        if q > 0.5 {
            return Ok(-self.marginal_quantile_upper(k, 1.0 - q)?);
        }
        if q == 0.5 {
            return Ok(0.0);
        }
        let lq = q.ln();
        let mut err = None;
        let mut f = |x: f64| -> f64 {
            match self.marginal_sf(k, x) {
                Ok(s) if s > 0.0 => s.ln() - lq,
                Ok(_) => f64::NEG_INFINITY,
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            }
        };
        let median = self.scale * self.radial.quantile_unchecked(0.5);
        let mut hi = (crate::gaussian::normal::norm_isf(q) * median).max(1e-3);
        let mut lo = 0.0;
        let mut steps = 0;
        loop {
            let v = f(hi);
            if v.is_nan() {
                return Err(err.unwrap_or_else(|| Error::RootBracket("NaN marginal survival".into())));
            }
            if v <= 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > 1100 || !hi.is_finite() {
                return Err(Error::RootBracket(format!("no upper bracket for marginal quantile at q = {q}")));
            }
        }
        let root = brent(&mut f, lo, hi, 1e-12 * hi.max(1.0), 200);
        if let Some(e) = err {
            return Err(e);
        }
        root
    }

    /// `G_I(x) = ∂^{|I|} G / ∂x_I`.
    pub fn partial_cdf(&self, x: &[f64], idx: &[usize]) -> Result<f64> {
        self.check_point(x)?;
        let mut given = idx.to_vec();
        given.sort_unstable();
        given.dedup();
        if given.len() != idx.len() || given.iter().any(|&i| i >= self.dim()) {
            return Err(Error::InvalidParameter("invalid differentiation index set".into()));
        }
        if given.is_empty() {
            return self.joint_cdf(x);
        }
        if given.len() == self.dim() {
            return self.joint_pdf(x);
        }
        let xg: Vec<f64> = given.iter().map(|&i| x[i]).collect();
        if xg.iter().any(|v| v.is_infinite()) {
            return Ok(0.0);
        }
        let blocks = CovarianceBlocks::new(&self.sigma, &given)?;
        let mean = blocks.conditional_mean(&xg);
        let b: Vec<f64> = blocks.free.iter().enumerate().map(|(a, &i)| x[i] - mean[a]).collect();
        let inner = InnerCdf::new(&b, &blocks.schur, API_GENZ_POINTS, point_seed(x, &given))?;
        if let InnerCdf::Zero = inner {
            return Ok(0.0);
        }
        let dens = MvnDensity::new(&blocks.sigma_gg)?;
        let q = dens.quad_form(&xg);
        let c = dens.ln_pdf_from_quad(0.0);
        let d = given.len() as f64;
        let cfg = self.quadrature;
        let res = self.radial_integral(
            |r| {
                let w = scaled_gaussian(c, q, d, r);
                if w == 0.0 {
                    0.0
                } else {
                    w * inner.eval(if r > 0.0 { 1.0 / r } else { 1e300 })
                }
            },
            &cfg,
        );
        self.finish(res, &cfg)
    }

    fn quantiles(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::InvalidParameter(format!("point of length {} for dimension {}", u.len(), self.dim())));
        }
        u.iter().map(|&v| self.marginal_quantile(0, v)).collect()
    }

    /// `C(u) = G{G⁻¹(u_1), …, G⁻¹(u_D)}`.
    pub fn copula_cdf(&self, u: &[f64]) -> Result<f64> {
        let x = self.quantiles(u)?;
        self.joint_cdf(&x)
    }

    /// Copula density `g(x) / ∏ g_k(x_k)`.
    pub fn copula_pdf(&self, u: &[f64]) -> Result<f64> {
        Ok(self.ln_copula_pdf(u)?.exp())
    }

    pub fn ln_copula_pdf(&self, u: &[f64]) -> Result<f64> {
        let x = self.quantiles(u)?;
        let mut v = self.joint_pdf(&x)?.ln();
        for &xi in &x {
            v -= self.marginal_pdf(0, xi)?.ln();
        }
        Ok(v)
    }

    /// `∂^{|I|} C / ∂u_I = G_I(x) / ∏_{k∈I} g_k(x_k)`.
    pub fn copula_partial(&self, u: &[f64], idx: &[usize]) -> Result<f64> {
        let x = self.quantiles(u)?;
        let mut v = self.partial_cdf(&x, idx)?;
        for &i in idx {
            v /= self.marginal_pdf(0, x[i])?;
        }
        Ok(v)
    }
}

/// `exp{c - q/(2r²) - d ln r}`: a Gaussian density at `x/r` times `r^{-d}`,
/// where `q` is the quadratic form of `x` and `c` the log-normaliser.
#[inline]
pub(crate) fn scaled_gaussian(c: f64, q: f64, d: f64, r: f64) -> f64 {
    if !(r > 0.0) || r == f64::INFINITY {
        return 0.0;
    }
    (c - 0.5 * q / (r * r) - d * r.ln()).exp()
}

#[cfg(test)]
mod tests;
