//! Censored pseudo-likelihood on the pseudo-uniform scale.
//!
//! Each replicate is classified against the thresholds `v` on its observed
//! components: all below (the copula `C(v)`), all above (the copula density)
//! or mixed (a partial derivative of `C` at `max(u, v)`).
//!
//! For one parameter value all radial integrals share a fixed rule. Inner
//! Gaussian probabilities of dimension three or more are estimated by a
//! lattice rule whose first coordinate picks a radial node with probability
//! proportional to its weight, so one lattice covers both integrals.

use super::data::PseudoUniformData;
use crate::error::{Error, Result};
use crate::gaussian::bvn::bvn_cdf;
use crate::gaussian::matrix::{select, CovarianceBlocks, MvnDensity};
use crate::gaussian::mvn::{GenzIntegrand, Lattice};
use crate::gaussian::normal::norm_cdf;
use crate::mixture::rule::{RadialRule, RuleConfig};
use crate::mixture::{MixtureModel, ParamVector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

/// Marginal thresholds on the uniform scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensorConfig {
    pub thresholds: Vec<f64>,
}

impl CensorConfig {
    pub fn uniform(d: usize, v: f64) -> Result<Self> {
        let c = Self { thresholds: vec![v; d] };
        c.validate(d)?;
        Ok(c)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.thresholds.len() != d {
            return Err(Error::InvalidParameter(format!(
                "{} thresholds for {d} sites",
                self.thresholds.len()
            )));
        }
        if let Some(v) = self.thresholds.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidParameter(format!("threshold {v} outside (0, 1)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LikelihoodConfig {
    pub rule: RuleConfig,
    /// Lattice size for partially censored terms with three or more
    /// censored components.
    pub partial_points: usize,
    /// Lattice size for fully censored terms of dimension four or more.
    pub censored_points: usize,
    /// Radial nodes with relative weight below this are dropped in exact
    /// partially censored terms.
    pub node_cutoff: f64,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        Self { rule: RuleConfig::default(), partial_points: 1024, censored_points: 8192, node_cutoff: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Empty,
    Censored,
    Uncensored,
    Partial,
}

impl Case {
    pub fn tag(&self) -> &'static str {
        match self {
            Case::Empty => "no observed component",
            Case::Censored => "fully censored",
            Case::Uncensored => "uncensored",
            Case::Partial => "partially censored",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub replicate: usize,
    pub case: Case,
    pub value: f64,
}

/// `ℓ(ψ)` for a parameter vector, with Σ built on the data's sites.
pub fn censored_loglik(
    psi: &ParamVector,
    data: &PseudoUniformData,
    censor: &CensorConfig,
    cfg: &LikelihoodConfig,
) -> Result<f64> {
    let model = psi.model(data.sites())?;
    model_loglik(&model, data, censor, cfg)
}

/// `ℓ` for a fully specified model whose dimension matches the data.
pub fn model_loglik(
    model: &MixtureModel,
    data: &PseudoUniformData,
    censor: &CensorConfig,
    cfg: &LikelihoodConfig,
) -> Result<f64> {
    let terms = contributions(model, data, censor, cfg)?;
    Ok(terms.iter().map(|c| c.value).sum())
}

/// The individual log contributions, in replicate order.
pub fn contributions(
    model: &MixtureModel,
    data: &PseudoUniformData,
    censor: &CensorConfig,
    cfg: &LikelihoodConfig,
) -> Result<Vec<Contribution>> {
    let d = data.dim();
    if model.dim() != d {
        return Err(Error::InvalidParameter(format!(
            "model of dimension {} for data with {d} sites",
            model.dim()
        )));
    }
    censor.validate(d)?;
    let engine = Engine::new(model, data, censor, cfg)?;
    (0..data.n()).into_par_iter().map(|i| engine.contribution(i)).collect()
}

fn hash_of<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

/// Classification of one row.
fn pattern(row: &[f64], v: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let observed: Vec<usize> = (0..row.len()).filter(|&k| !row[k].is_nan()).collect();
    let exceed: Vec<usize> = observed.iter().copied().filter(|&k| row[k] > v[k]).collect();
    (observed, exceed)
}

enum Pattern {
    Empty,
    Censored(f64),
    Uncensored(MvnDensity),
    Partial(PartialBlocks),
}

struct PartialBlocks {
    /// Positions (in the row) of the exceeding and censored components.
    exceed: Vec<usize>,
    censored: Vec<usize>,
    regression: DMatrix<f64>,
    schur: DMatrix<f64>,
    dens: MvnDensity,
}

struct Engine<'a> {
    rule: RadialRule,
    data: &'a PseudoUniformData,
    censor: &'a CensorConfig,
    cfg: &'a LikelihoodConfig,
    /// `u` bits ↦ `(x, ln g(x))`.
    quant: HashMap<u64, (f64, f64)>,
    patterns: HashMap<(Vec<usize>, Vec<usize>), Pattern>,
    cum_w: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(model: &MixtureModel, data: &'a PseudoUniformData, censor: &'a CensorConfig, cfg: &'a LikelihoodConfig) -> Result<Self> {
        let rule = RadialRule::new(model.radial(), &cfg.rule)?;
        let v = &censor.thresholds;
        let mut us: Vec<f64> = v.clone();
        let mut keys = Vec::new();
        for i in 0..data.n() {
            let row = data.row(i);
            for k in 0..row.len() {
                if row[k] > v[k] {
                    us.push(row[k]);
                }
            }
            let key = pattern(row, v);
            keys.push(key);
        }
        us.sort_by(f64::total_cmp);
        us.dedup();
        let qs: Vec<(u64, (f64, f64))> = us
            .par_iter()
            .map(|&u| {
                let x = rule.marginal_quantile(u)?;
                Ok((u.to_bits(), (x, rule.marginal_pdf(x).ln())))
            })
            .collect::<Result<_>>()?;
        let quant: HashMap<u64, (f64, f64)> = qs.into_iter().collect();
        keys.sort();
        keys.dedup();
        let mut cum_w = Vec::with_capacity(rule.len());
        let mut acc = 0.0;
        for w in rule.weights() {
            acc += w;
            cum_w.push(acc);
        }
        let mut engine = Self { rule, data, censor, cfg, quant, patterns: HashMap::new(), cum_w };
        let sigma = model.sigma();
        let built: Vec<((Vec<usize>, Vec<usize>), Pattern)> = keys
            .into_par_iter()
            .map(|key| {
                let p = engine.build_pattern(sigma, &key.0, &key.1)?;
                Ok((key, p))
            })
            .collect::<Result<_>>()?;
        engine.patterns = built.into_iter().collect();
        Ok(engine)
    }

    fn x_of(&self, u: f64) -> (f64, f64) {
        self.quant[&u.to_bits()]
    }

    fn build_pattern(&self, sigma: &DMatrix<f64>, observed: &[usize], exceed: &[usize]) -> Result<Pattern> {
        if observed.is_empty() {
            return Ok(Pattern::Empty);
        }
        let s_oo = select(sigma, observed, observed);
        if exceed.len() == observed.len() {
            return Ok(Pattern::Uncensored(MvnDensity::new(&s_oo)?));
        }
        if exceed.is_empty() {
            return Ok(Pattern::Censored(self.ln_censored(&s_oo, observed)?));
        }
        let given: Vec<usize> = (0..observed.len()).filter(|&a| exceed.contains(&observed[a])).collect();
        let blocks = CovarianceBlocks::new(&s_oo, &given)?;
        Ok(Pattern::Partial(PartialBlocks {
            exceed: exceed.to_vec(),
            censored: blocks.free.iter().map(|&a| observed[a]).collect(),
            dens: MvnDensity::new(&blocks.sigma_gg)?,
            regression: blocks.regression,
            schur: blocks.schur,
        }))
    }

    /// `ln C(v_O)`.
    fn ln_censored(&self, s_oo: &DMatrix<f64>, observed: &[usize]) -> Result<f64> {
        let v = &self.censor.thresholds;
        if observed.len() == 1 {
            return Ok(v[observed[0]].ln());
        }
        let b: Vec<f64> = observed.iter().map(|&k| self.x_of(v[k]).0).collect();
        let inv = self.rule.inv_nodes();
        let w = self.rule.weights();
        let p = match observed.len() {
            2 => {
                let rho = s_oo[(0, 1)];
                (0..inv.len()).map(|j| w[j] * bvn_cdf(b[0] * inv[j], b[1] * inv[j], rho)).sum::<f64>()
            }
            3 => {
                let r = [s_oo[(0, 1)], s_oo[(0, 2)], s_oo[(1, 2)]];
                (0..inv.len())
                    .map(|j| {
                        let s = inv[j];
                        w[j] * crate::mixture::trivariate_cdf([b[0] * s, b[1] * s, b[2] * s], r)
                    })
                    .sum::<f64>()
            }
            _ => {
                let f = GenzIntegrand::new(&b, s_oo)?;
                let seed = hash_of(&(observed, 0x5eed_u64));
                self.mixed_lattice(&f, &self.cum_w, self.cfg.censored_points, seed)
            }
        };
        Ok(p.ln())
    }

    /// `Σ_j ω_j Φ(r_j⁻¹ b) / Σ_j ω_j`, with cumulative weights `cum`. The
    /// first lattice coordinate picks node `j` with probability `ω_j / Σ ω`.
    fn mixed_lattice(&self, f: &GenzIntegrand, cum: &[f64], points: usize, seed: u64) -> f64 {
        let q = f.qmc_dim() + 1;
        let lattice = Lattice::new(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..q).map(|_| rng.gen()).collect();
        let total = *cum.last().unwrap();
        let inv = self.rule.inv_nodes();
        let mut pt = vec![0.0; q];
        let mut y = vec![0.0; f.dim()];
        let mut acc = 0.0;
        let n = points.max(1);
        for k in 1..=n {
            lattice.point(k, &shift, &mut pt);
            let t = pt[0] * total;
            let j = cum.partition_point(|&c| c < t).min(cum.len() - 1);
            acc += f.eval(&pt[1..], inv[j], &mut y);
        }
        acc / n as f64
    }

    fn contribution(&self, i: usize) -> Result<Contribution> {
        let row = self.data.row(i);
        let v = &self.censor.thresholds;
        let key = pattern(row, v);
        let (case, value) = match &self.patterns[&key] {
            Pattern::Empty => (Case::Empty, 0.0),
            Pattern::Censored(c) => (Case::Censored, *c),
            Pattern::Uncensored(dens) => {
                let xs: Vec<(f64, f64)> = key.0.iter().map(|&k| self.x_of(row[k])).collect();
                let x: Vec<f64> = xs.iter().map(|p| p.0).collect();
                let q = dens.quad_form(&x);
                let lg = self.rule.ln_density(dens.ln_pdf_from_quad(0.0), q, x.len() as f64);
                (Case::Uncensored, lg - xs.iter().map(|p| p.1).sum::<f64>())
            }
            Pattern::Partial(p) => (Case::Partial, self.ln_partial(p, row, i)?),
        };
        if !value.is_finite() {
            return Err(Error::NonFiniteContribution { replicate: i, case: case.tag() });
        }
        Ok(Contribution { replicate: i, case, value })
    }

    /// `ln ∂^{|I|}C/∂u_I` at `u★ = max(u, v)`.
    fn ln_partial(&self, p: &PartialBlocks, row: &[f64], i: usize) -> Result<f64> {
        let v = &self.censor.thresholds;
        let xi: Vec<(f64, f64)> = p.exceed.iter().map(|&k| self.x_of(row[k])).collect();
        let x_i: Vec<f64> = xi.iter().map(|t| t.0).collect();
        let ln_margins: f64 = xi.iter().map(|t| t.1).sum();
        let mean = &p.regression * nalgebra::DVector::from_column_slice(&x_i);
        let b: Vec<f64> = p.censored.iter().enumerate().map(|(a, &k)| self.x_of(v[k]).0 - mean[a]).collect();
        let q = p.dens.quad_form(&x_i);
        let c = p.dens.ln_pdf_from_quad(0.0);
        let dim = x_i.len() as f64;
        let ln_w = self.rule.ln_weights();
        let ln_r = self.rule.ln_nodes();
        let inv = self.rule.inv_nodes();
        let ln_om: Vec<f64> = (0..inv.len())
            .map(|j| ln_w[j] - 0.5 * q * inv[j] * inv[j] - dim * ln_r[j])
            .collect();
        let m = ln_om.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Err(Error::NonFiniteContribution { replicate: i, case: Case::Partial.tag() });
        }
        let om: Vec<f64> = ln_om.iter().map(|t| (t - m).exp()).collect();
        let total: f64 = om.iter().sum();
        let kc = b.len();
        let mean_phi = if kc <= 2 {
            let sd: Vec<f64> = (0..kc).map(|a| p.schur[(a, a)].sqrt()).collect();
            let h: Vec<f64> = b.iter().zip(&sd).map(|(b, s)| b / s).collect();
            let rho = if kc == 2 { (p.schur[(0, 1)] / (sd[0] * sd[1])).clamp(-1.0, 1.0) } else { 0.0 };
            let cut = self.cfg.node_cutoff;
            let mut acc = 0.0;
            for j in 0..inv.len() {
                if om[j] < cut {
                    continue;
                }
                let s = inv[j];
                let phi = if kc == 1 { norm_cdf(h[0] * s) } else { bvn_cdf(h[0] * s, h[1] * s, rho) };
                acc += om[j] * phi;
            }
            acc / total
        } else {
            let f = GenzIntegrand::new(&b, &p.schur)?;
            let mut cum = Vec::with_capacity(om.len());
            let mut acc = 0.0;
            for w in &om {
                acc += w;
                cum.push(acc);
            }
            let seed = hash_of(&(row.iter().map(|u| u.to_bits()).collect::<Vec<_>>(), &p.exceed));
            self.mixed_lattice(&f, &cum, self.cfg.partial_points, seed)
        };
        Ok(c + m + total.ln() + mean_phi.ln() - ln_margins)
    }
}
