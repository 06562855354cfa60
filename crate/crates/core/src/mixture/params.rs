//! Named parameter vectors for the model families.

use crate::error::{Error, Result};
use crate::gaussian::sites::{CorrelationModel, SiteSet};
use crate::mixture::MixtureModel;
use crate::radial::RadialLaw;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gauss,
    Student,
    Rayleigh,
    Slash,
    Gpd,
    Model2,
    Model3,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Gauss,
        Family::Student,
        Family::Rayleigh,
        Family::Slash,
        Family::Gpd,
        Family::Model2,
        Family::Model3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gauss => "gauss",
            Family::Student => "student",
            Family::Rayleigh => "rayleigh",
            Family::Slash => "slash",
            Family::Gpd => "gpd",
            Family::Model2 => "model2",
            Family::Model3 => "model3",
        }
    }

    /// Radial parameters: name, default, lower, upper, transform.
    fn radial_specs(&self) -> Vec<ParamSpec> {
        match self {
            Family::Gauss | Family::Rayleigh => vec![],
            Family::Student => vec![ParamSpec::new("df", 5.0, 0.0, f64::INFINITY, Transform::Log)],
            Family::Slash => vec![ParamSpec::new("gamma", 2.0, 0.0, f64::INFINITY, Transform::Log)],
            Family::Gpd => vec![ParamSpec::new("xi", 0.2, -5.0, 5.0, Transform::Logit)],
            Family::Model2 => vec![
                ParamSpec::new("beta", 1.0, 0.0, f64::INFINITY, Transform::Log).closed_below(),
                ParamSpec::new("gamma", 1.0, 0.0, f64::INFINITY, Transform::Log),
            ],
            Family::Model3 => vec![ParamSpec::new("beta", 0.5, -20.0, 20.0, Transform::Logit)],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model family '{s}'")))
    }
}

/// Map between a constrained parameter and the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `z = ln(x - lower)`.
    Log,
    /// `z = logit((x - lower)/(upper - lower))`; for the smoothness, `(0, 2]`.
    Logit,
    /// Angles modulo `π`; `z = θ`.
    Angle,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub value: f64,
    #[serde(with = "ext_f64")]
    pub lower: f64,
    #[serde(with = "ext_f64")]
    pub upper: f64,
    pub transform: Transform,
    pub fixed: bool,
    /// Whether `value == lower` is admissible (only reachable by fixing).
    #[serde(default)]
    pub lower_closed: bool,
}

const EDGE: f64 = 1e-12;

/// JSON has no infinities; write them as the strings "inf" and "-inf".
mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("expected a number, got '{s}'"))),
            },
        }
    }
}

impl ParamSpec {
    pub fn new(name: &str, value: f64, lower: f64, upper: f64, transform: Transform) -> Self {
        Self { name: name.to_string(), value, lower, upper, transform, fixed: false, lower_closed: false }
    }

    fn closed_below(mut self) -> Self {
        self.lower_closed = true;
        self
    }

    pub fn in_bounds(&self, v: f64) -> bool {
        match self.transform {
            Transform::Angle => v.is_finite(),
            Transform::Log => (v > self.lower || (self.lower_closed && v == self.lower)) && v <= self.upper,
            // the smoothness may sit on its upper end ν = 2
            Transform::Logit => v > self.lower && v <= self.upper,
            Transform::Identity => v >= self.lower && v <= self.upper,
        }
    }

    pub fn to_unconstrained(&self, v: f64) -> f64 {
        match self.transform {
            Transform::Log => (v - self.lower).ln(),
            Transform::Logit => {
                let w = self.upper - self.lower;
                let p = ((v - self.lower) / w).clamp(EDGE, 1.0 - EDGE);
                (p / (1.0 - p)).ln()
            }
            Transform::Angle | Transform::Identity => v,
        }
    }

    pub fn from_unconstrained(&self, z: f64) -> f64 {
        match self.transform {
            Transform::Log => self.lower + z.exp(),
            Transform::Logit => {
                let p = 1.0 / (1.0 + (-z).exp());
                self.lower + (self.upper - self.lower) * p
            }
            Transform::Angle => z.rem_euclid(PI),
            Transform::Identity => z.clamp(self.lower, self.upper),
        }
    }
}

/// Ordered parameter list `ψ`: correlation parameters, then radial ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub family: Family,
    pub anisotropic: bool,
    pub params: Vec<ParamSpec>,
}

impl ParamVector {
    /// Defaults: `λ = 1`, `ν = 1`, isotropic unless requested.
    pub fn new(family: Family, anisotropic: bool) -> Self {
        let mut params = vec![
            ParamSpec::new("range", 1.0, 0.0, f64::INFINITY, Transform::Log),
            ParamSpec::new("smoothness", 1.0, 0.0, 2.0, Transform::Logit),
        ];
        if anisotropic {
            params.push(ParamSpec::new("aniso_ratio", 1.0, 0.0, f64::INFINITY, Transform::Log));
            params.push(ParamSpec::new("angle", 0.0, 0.0, PI, Transform::Angle));
        }
        params.extend(family.radial_specs());
        Self { family, anisotropic, params }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("family {} has no parameter '{name}'", self.family)))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn spec(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self.position(name)?;
        let p = &mut self.params[i];
        if !p.in_bounds(value) {
            return Err(Error::InvalidParameter(format!(
                "{name} = {value} outside ({}, {}]",
                p.lower, p.upper
            )));
        }
        p.value = if p.transform == Transform::Angle { value.rem_euclid(PI) } else { value };
        Ok(())
    }

    pub fn fix(&mut self, name: &str, value: f64) -> Result<()> {
        self.set(name, value)?;
        let i = self.position(name)?;
        self.params[i].fixed = true;
        Ok(())
    }

    pub fn release(&mut self, name: &str) -> Result<()> {
        let i = self.position(name)?;
        self.params[i].fixed = false;
        Ok(())
    }

    pub fn is_fixed(&self, name: &str) -> bool {
        self.spec(name).map(|p| p.fixed).unwrap_or(false)
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn free_names(&self) -> Vec<&str> {
        self.params.iter().filter(|p| !p.fixed).map(|p| p.name.as_str()).collect()
    }

    pub fn n_free(&self) -> usize {
        self.params.iter().filter(|p| !p.fixed).count()
    }

    /// Free parameters on the real line.
    pub fn to_unconstrained(&self) -> Vec<f64> {
        self.params.iter().filter(|p| !p.fixed).map(|p| p.to_unconstrained(p.value)).collect()
    }

    /// Copy with the free parameters replaced from `z`.
    pub fn from_unconstrained(&self, z: &[f64]) -> Result<Self> {
        if z.len() != self.n_free() {
            return Err(Error::InvalidParameter("wrong number of free coordinates".into()));
        }
        let mut out = self.clone();
        let mut k = 0;
        for p in out.params.iter_mut().filter(|p| !p.fixed) {
            if !z[k].is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite coordinate for {}", p.name)));
            }
            p.value = p.from_unconstrained(z[k]);
            k += 1;
        }
        Ok(out)
    }

    pub fn radial_law(&self) -> Result<RadialLaw> {
        let g = |n: &str| self.get(n).ok_or_else(|| Error::InvalidParameter(format!("missing {n}")));
        let law = match self.family {
            Family::Gauss => RadialLaw::Dirac { r0: 1.0 },
            Family::Rayleigh => RadialLaw::Rayleigh,
            Family::Student => RadialLaw::Student { df: g("df")? },
            Family::Slash => RadialLaw::ParetoSlash { gamma: g("gamma")? },
            Family::Gpd => RadialLaw::Gpd { xi: g("xi")? },
            Family::Model2 => RadialLaw::ExtWeibull { beta: g("beta")?, gamma: g("gamma")? },
            Family::Model3 => RadialLaw::BoxCox { beta: g("beta")? },
        };
        law.validate()?;
        Ok(law)
    }

    pub fn correlation_model(&self) -> Result<CorrelationModel> {
        let range = self.get("range").unwrap_or(1.0);
        let nu = self.get("smoothness").unwrap_or(1.0);
        let ratio = self.get("aniso_ratio").unwrap_or(1.0);
        let angle = self.get("angle").unwrap_or(0.0);
        CorrelationModel::new(range, nu, ratio, angle)
    }

    pub fn model(&self, sites: &SiteSet) -> Result<MixtureModel> {
        MixtureModel::new(self.radial_law()?, self.correlation_model()?, sites.clone())
    }

    /// Rewrites the anisotropy in its canonical form with ratio `>= 1`.
    pub fn canonicalize(&mut self) -> Result<()> {
        if !self.anisotropic {
            return Ok(());
        }
        let c = self.correlation_model()?.canonical();
        let i = self.position("range")?;
        self.params[i].value = c.range;
        let i = self.position("aniso_ratio")?;
        self.params[i].value = c.aniso_ratio;
        let i = self.position("angle")?;
        self.params[i].value = c.angle;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn families_parse_by_name() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("laplace".parse::<Family>().is_err());
    }

    #[test]
    fn default_vectors_build_models() {
        let sites = SiteSet::uniform_square(4, 2.0, 1).unwrap();
        for f in Family::ALL {
            for aniso in [false, true] {
                let p = ParamVector::new(f, aniso);
                assert_eq!(p.model(&sites).unwrap().dim(), 4);
            }
        }
    }

    #[test]
    fn bounds_are_enforced() {
        let mut p = ParamVector::new(Family::Model2, false);
        assert!(p.set("smoothness", 2.0).is_ok());
        assert!(p.set("smoothness", 2.1).is_err());
        assert!(p.set("range", 0.0).is_err());
        assert!(p.set("df", 3.0).is_err());
        p.fix("beta", 0.5).unwrap();
        assert_eq!(p.free_names(), vec!["range", "smoothness", "gamma"]);
    }

    #[test]
    fn canonical_form_has_ratio_at_least_one() {
        let mut p = ParamVector::new(Family::Gauss, true);
        p.set("aniso_ratio", 0.5).unwrap();
        p.set("angle", 0.3).unwrap();
        p.canonicalize().unwrap();
        assert!((p.get("aniso_ratio").unwrap() - 2.0).abs() < 1e-12);
        assert!((p.get("range").unwrap() - 2.0).abs() < 1e-12);
        assert!((p.get("angle").unwrap() - (0.3 + PI / 2.0)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn transforms_round_trip(z in prop::collection::vec(-8.0f64..8.0, 7)) {
            let p = ParamVector::new(Family::Model2, true);
            let q = p.from_unconstrained(&z[..p.n_free()]).unwrap();
            for spec in &q.params {
                prop_assert!(spec.in_bounds(spec.value), "{} = {}", spec.name, spec.value);
            }
            let back = q.to_unconstrained();
            for (a, b) in back.iter().zip(&z) {
                // angles are only recovered modulo π
                let d = a - b;
                prop_assert!(d.abs() < 1e-8 || ((d / PI).round() * PI - d).abs() < 1e-8, "{a} vs {b}");
            }
            let again = q.from_unconstrained(&back).unwrap();
            for (a, b) in again.values().iter().zip(q.values()) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }
}
