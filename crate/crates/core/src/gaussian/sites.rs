//! Site registries and the powered-exponential correlation family.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;

/// Largest admissible condition number of a correlation matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    coords: Vec<[f64; 2]>,
    labels: Vec<String>,
}

impl SiteSet {
    pub fn new(coords: Vec<[f64; 2]>, labels: Vec<String>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidData("site set is empty".into()));
        }
        if coords.len() != labels.len() {
            return Err(Error::InvalidData(format!(
                "{} coordinates but {} labels",
                coords.len(),
                labels.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(Error::InvalidData(format!("site {} has non-finite coordinates", labels[i])));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidData(format!("duplicate site label {l}")));
            }
        }
        Ok(Self { coords, labels })
    }

    /// Sites labelled `s1, s2, …`.
    pub fn from_coords(coords: Vec<[f64; 2]>) -> Result<Self> {
        let labels = (1..=coords.len()).map(|i| format!("s{i}")).collect();
        Self::new(coords, labels)
    }

    /// `d` sites uniform on `[0, side]²`.
    pub fn uniform_square(d: usize, side: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..d)
            .map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side])
            .collect();
        Self::from_coords(coords)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            idx.iter().map(|&i| self.coords[i]).collect(),
            idx.iter().map(|&i| self.labels[i].clone()).collect(),
        )
    }

    /// Concatenation; labels must stay unique.
    pub fn concat(&self, other: &SiteSet) -> Result<Self> {
        let mut c = self.coords.clone();
        c.extend_from_slice(&other.coords);
        let mut l = self.labels.clone();
        l.extend_from_slice(&other.labels);
        Self::new(c, l)
    }

    /// Median of the pairwise Euclidean distances.
    pub fn median_distance(&self) -> f64 {
        let mut d = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let dx = self.coords[i][0] - self.coords[j][0];
                let dy = self.coords[i][1] - self.coords[j][1];
                d.push(dx.hypot(dy));
            }
        }
        if d.is_empty() {
            return 1.0;
        }
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    }
}

/// Powered-exponential correlation `exp{-(h/λ)^ν}` with geometric anisotropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    pub range: f64,
    pub smoothness: f64,
    pub aniso_ratio: f64,
    pub angle: f64,
}

impl CorrelationModel {
    pub fn new(range: f64, smoothness: f64, aniso_ratio: f64, angle: f64) -> Result<Self> {
        let m = Self { range, smoothness, aniso_ratio, angle: angle.rem_euclid(PI) };
        m.validate()?;
        Ok(m)
    }

    pub fn isotropic(range: f64, smoothness: f64) -> Result<Self> {
        Self::new(range, smoothness, 1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::InvalidParameter(format!("range must be positive, got {}", self.range)));
        }
        if !(self.smoothness > 0.0 && self.smoothness <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness must lie in (0, 2], got {}",
                self.smoothness
            )));
        }
        if !(self.aniso_ratio > 0.0 && self.aniso_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "anisotropy ratio must be positive, got {}",
                self.aniso_ratio
            )));
        }
        if !self.angle.is_finite() {
            return Err(Error::InvalidParameter("angle must be finite".into()));
        }
        Ok(())
    }

    /// Correlation at lag `d = s1 - s2`.
    pub fn rho_lag(&self, d: [f64; 2]) -> f64 {
        let h = aniso_norm(d, self.aniso_ratio, self.angle);
        (-(h / self.range).powf(self.smoothness)).exp()
    }

    pub fn rho(&self, s1: [f64; 2], s2: [f64; 2]) -> f64 {
        self.rho_lag([s1[0] - s2[0], s1[1] - s2[1]])
    }

    /// Representative with `λ12 >= 1`: `(λ, λ12, θ)` and `(λ/λ12, 1/λ12, θ+π/2)`
    /// give the same correlation function.
    pub fn canonical(&self) -> Self {
        if self.aniso_ratio >= 1.0 {
            let mut c = *self;
            c.angle = c.angle.rem_euclid(PI);
            c
        } else {
            Self {
                range: self.range / self.aniso_ratio,
                smoothness: self.smoothness,
                aniso_ratio: 1.0 / self.aniso_ratio,
                angle: (self.angle + 0.5 * PI).rem_euclid(PI),
            }
        }
    }
}

#[inline]
fn aniso_norm(d: [f64; 2], ratio: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    // coordinates in the rotated frame, first axis along θ
    let a = c * d[0] + s * d[1];
    let b = -s * d[0] + c * d[1];
    (a * a + ratio * ratio * b * b).sqrt()
}

/// `h` with `h² = (s1-s2)ᵀ Ω⁻¹ (s1-s2)`, `Ω = R(θ) diag(1, λ12⁻²) R(θ)ᵀ`.
pub fn mahalanobis_distance(s1: [f64; 2], s2: [f64; 2], aniso_ratio: f64, angle: f64) -> f64 {
    aniso_norm([s1[0] - s2[0], s1[1] - s2[1]], aniso_ratio, angle)
}

/// Correlation matrix of the sites, checked by Cholesky and a condition bound.
pub fn build_correlation(sites: &SiteSet, model: &CorrelationModel) -> Result<DMatrix<f64>> {
    model.validate()?;
    let d = sites.len();
    let c = sites.coords();
    let mut m = DMatrix::<f64>::identity(d, d);
    for i in 0..d {
        for j in 0..i {
            let r = model.rho(c[i], c[j]);
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    check_correlation(&m)?;
    Ok(m)
}

/// Errors unless `m` is positive definite with condition number below [`MAX_CONDITION`].
pub fn check_correlation(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 1 {
        return Ok(());
    }
    if m.clone().cholesky().is_none() {
        return Err(Error::SingularMatrix("Cholesky factorisation failed".into()));
    }
    let ev = m.clone().symmetric_eigenvalues();
    let lo = ev.min();
    let hi = ev.max();
    if lo <= 0.0 || hi / lo > MAX_CONDITION {
        return Err(Error::SingularMatrix(format!("condition number {:.3e}", hi / lo)));
    }
    Ok(())
}
