//! Conditional densities through the elliptical representation.
//!
//! `X` has density `|Σ|^{-1/2} h_D(xᵀΣ⁻¹x)` where the generator comes from
//! the law of `R R_W`, `R_W` chi-distributed with `D` degrees of freedom:
//! `h_D(t) = A_D⁻¹ t^{(1-D)/2} f_{RR_W}(√t)`.

use crate::error::{Error, Result};
use crate::gaussian::matrix::{CovarianceBlocks, MvnDensity};
use crate::mixture::MixtureModel;
use crate::quadrature::{integrate, integrate_half_line, QuadratureConfig};
use crate::radial::RadialLaw;
use crate::special::ln_gamma;
use nalgebra::DVector;
use std::f64::consts::PI;

/// Surface area of the unit sphere in `R^d`: `2 π^{d/2} / Γ(d/2)`, so that
/// `A_1 = 2` counts both points of the zero-dimensional sphere.
pub fn sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    (std::f64::consts::LN_2 + h * PI.ln() - ln_gamma(h)).exp()
}

fn ln_chi_pdf(y: f64, d: f64) -> f64 {
    (d - 1.0) * y.ln() - 0.5 * y * y - (0.5 * d - 1.0) * std::f64::consts::LN_2 - ln_gamma(0.5 * d)
}

fn oracle_quadrature() -> QuadratureConfig {
    QuadratureConfig::default().with_rel_tol(1e-10).with_abs_tol(1e-300)
}

/// Density of `c R R_W` at `rho`, with `R_W` chi with `d` degrees of freedom.
fn product_radius_pdf(law: &RadialLaw, c: f64, d: usize, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Ok(0.0);
    }
    let df = d as f64;
    if let RadialLaw::Dirac { r0 } = *law {
        let s = c * r0;
        return Ok((ln_chi_pdf(rho / s, df)).exp() / s);
    }
    // ∫ F(s⁻¹){f_W(ρs) + f_W'(ρs)ρs} ds with y = ρ s; f_W + y f_W' = f_W (D - y²)
    let fw = |y: f64| if y > 0.0 { ln_chi_pdf(y, df).exp() * (df - y * y) } else { 0.0 };
    let (lo, hi) = law.support();
    let mut breaks = vec![df.sqrt()];
    if lo > 0.0 {
        breaks.push(rho / (c * lo));
    }
    if hi.is_finite() {
        breaks.push(rho / (c * hi));
    }
    let ymax = df.sqrt() + 14.0;
    // ∫ f_W (D - y²) dy = 0, so either F or its complement may be integrated
    let use_sf = law.cdf(rho / (c * df.sqrt())) > 0.5;
    let cfg = oracle_quadrature();
    let res = integrate(
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            let t = rho / (c * y);
            let w = if use_sf { -law.sf(t) } else { law.cdf(t) };
            w * fw(y)
        },
        0.0,
        ymax,
        &breaks,
        &cfg,
    );
    if !res.converged && res.abs_error > 1e-6 * res.value.abs().max(1e-300) {
        return Err(Error::Quadrature { achieved: res.abs_error, target: cfg.rel_tol });
    }
    Ok((res.value / rho).max(0.0))
}

/// Elliptical description of `X_2 | X_1 = x_1`.
#[derive(Debug, Clone)]
pub struct EllipticalConditional {
    law: RadialLaw,
    scale: f64,
    d: usize,
    d2: usize,
    pub mu: DVector<f64>,
    pub sigma: nalgebra::DMatrix<f64>,
    /// `x_1ᵀ Σ_{11}⁻¹ x_1`.
    pub c1: f64,
    /// Normalising constant `A_{D_2} ∫ h_D(r² + c_1) r^{D_2-1} dr`.
    pub c0: f64,
    dens2: MvnDensity,
}

impl EllipticalConditional {
    pub fn new(model: &MixtureModel, given: &[usize], x1: &[f64]) -> Result<Self> {
        if given.is_empty() || given.len() >= model.dim() || given.len() != x1.len() {
            return Err(Error::InvalidParameter("invalid conditioning split".into()));
        }
        let blocks = CovarianceBlocks::new(model.sigma(), given)?;
        let d1 = MvnDensity::new(&blocks.sigma_gg)?;
        let mut out = Self {
            law: *model.radial(),
            scale: model.radial_scale(),
            d: model.dim(),
            d2: blocks.free.len(),
            mu: blocks.conditional_mean(x1),
            dens2: MvnDensity::new(&blocks.schur)?,
            sigma: blocks.schur,
            c1: d1.quad_form(x1),
            c0: 0.0,
        };
        let d2 = out.d2 as f64;
        let mut err = None;
        let res = integrate_half_line(
            |r| match out.generator(r * r + out.c1) {
                Ok(h) => h * r.powf(d2 - 1.0),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            0.0,
            out.c1.sqrt().max(1.0),
            &oracle_quadrature(),
        );
        if let Some(e) = err {
            return Err(e);
        }
        out.c0 = sphere_area(out.d2) * res.value;
        if !(out.c0 > 0.0) {
            return Err(Error::Underflow("conditional normalising constant vanished".into()));
        }
        Ok(out)
    }

    /// `h_D(t)`.
    pub fn generator(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Ok(0.0);
        }
        let rho = t.sqrt();
        let f = product_radius_pdf(&self.law, self.scale, self.d, rho)?;
        Ok(f * t.powf(0.5 * (1.0 - self.d as f64)) / sphere_area(self.d))
    }

    /// `c_0⁻¹ |Σ_{2|1}|^{-1/2} h_D{(x_2 - μ)ᵀ Σ_{2|1}⁻¹ (x_2 - μ) + c_1}`.
    pub fn density(&self, x2: &[f64]) -> Result<f64> {
        if x2.len() != self.d2 {
            return Err(Error::InvalidParameter("target point has the wrong length".into()));
        }
        let z: Vec<f64> = x2.iter().zip(self.mu.iter()).map(|(a, b)| a - b).collect();
        let q = self.dens2.quad_form(&z);
        Ok(self.generator(q + self.c1)? * (-0.5 * self.dens2.log_det()).exp() / self.c0)
    }

    /// Density of the conditional radius `R_{2|1}`.
    pub fn radius_density(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Ok(0.0);
        }
        Ok(sphere_area(self.d2) * r.powf(self.d2 as f64 - 1.0) * self.generator(r * r + self.c1)? / self.c0)
    }

    /// Density of `X_2` from the pseudo-polar route, for one target site:
    /// `μ + R_{2|1} σ U` with `U = ±1`.
    pub fn density_pseudo_polar(&self, x2: f64) -> Result<f64> {
        if self.d2 != 1 {
            return Err(Error::InvalidParameter("pseudo-polar density implemented for one target".into()));
        }
        let s = self.sigma[(0, 0)].sqrt();
        let r = (x2 - self.mu[0]).abs() / s;
        Ok(0.5 * self.radius_density(r)? / s)
    }

    /// Conditional CDF of a single target at increasing points `xs`, by
    /// integrating [`Self::density`].
    pub fn cdf_on_grid(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if self.d2 != 1 {
            return Err(Error::InvalidParameter("conditional CDF implemented for one target".into()));
        }
        if xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("grid must be increasing".into()));
        }
        let cfg = oracle_quadrature();
        let mut err = None;
        let mut f = |x: f64| match self.density(&[x]) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        };
        let s = self.sigma[(0, 0)].sqrt();
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = match xs.first() {
            Some(&x0) => integrate_half_line(|y| f(-y), -x0, s, &cfg).value,
            None => return Ok(out),
        };
        out.push(acc);
        for w in xs.windows(2) {
            acc += integrate(&mut f, w[0], w[1], &[self.mu[0]], &cfg).value;
            out.push(acc);
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok(out)
    }
}

/// `f(x_2 | x_1)` from the elliptical generator.
pub fn conditional_density(model: &MixtureModel, given: &[usize], x1: &[f64], x2: &[f64]) -> Result<f64> {
    EllipticalConditional::new(model, given, x1)?.density(x2)
}

/// `g(x_1, x_2) / g(x_1)` from the mixture densities.
pub fn conditional_density_ratio(model: &MixtureModel, given: &[usize], x1: &[f64], x2: &[f64]) -> Result<f64> {
    let d = model.dim();
    let free = crate::gaussian::matrix::complement(d, given);
    if free.len() != x2.len() || given.len() != x1.len() {
        return Err(Error::InvalidParameter("invalid conditioning split".into()));
    }
    let mut x = vec![0.0; d];
    for (k, &i) in given.iter().enumerate() {
        x[i] = x1[k];
    }
    for (k, &i) in free.iter().enumerate() {
        x[i] = x2[k];
    }
    let joint = model.joint_pdf(&x)?;
    let marg = model.subset(given)?.joint_pdf(x1)?;
    Ok(joint / marg)
}
