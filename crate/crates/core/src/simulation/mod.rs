//! Unconditional and conditional sampling of `X = R W`.

mod density;

use crate::error::{Error, Result};
use crate::gaussian::matrix::{cholesky_lower, complement, select, CovarianceBlocks, MvnDensity};
use crate::gaussian::sites::{CorrelationModel, SiteSet};
use crate::mixture::rule::RadialRule;
use crate::mixture::MixtureModel;
use crate::radial::RadialLaw;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use density::{conditional_density, conditional_density_ratio, EllipticalConditional};

/// Independent draws of `X`, one row per replicate.
pub fn simulate(model: &MixtureModel, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let l = cholesky_lower(model.sigma())?;
    let d = model.dim();
    let law = *model.radial();
    let c = model.radial_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DVector::zeros(d);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r = c * law.sample(&mut rng);
        for v in z.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let w = &l * &z;
        out.push(w.iter().map(|v| r * v).collect());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    /// Standard deviation of the random walk on `ln r`.
    pub proposal_sd: f64,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { proposal_sd: 1.0, burn_in: 1000, thin: 10 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_sd > 0.0 && self.proposal_sd.is_finite()) || self.burn_in == 0 || self.thin == 0 {
            return Err(Error::InvalidParameter("MCMC settings must all be positive".into()));
        }
        Ok(())
    }
}

/// Law of the scale given `X_1 = x_1`, known up to `g(x_1)`:
/// `r ↦ r^{-D_1} f(r) φ(x_1/r; Σ_{11})`.
#[derive(Debug, Clone)]
pub struct ConditionalScaleLaw {
    law: RadialLaw,
    scale: f64,
    d1: f64,
    /// `x_1ᵀ Σ_{11}⁻¹ x_1`.
    quad: f64,
    ln_c: f64,
}

impl ConditionalScaleLaw {
    pub fn new(model: &MixtureModel, given: &[usize], x1: &[f64]) -> Result<Self> {
        if given.is_empty() || given.len() != x1.len() {
            return Err(Error::InvalidParameter("need at least one conditioning value per index".into()));
        }
        if x1.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("conditioning values must be finite".into()));
        }
        let s11 = select(model.sigma(), given, given);
        let dens = MvnDensity::new(&s11)?;
        Ok(Self {
            law: *model.radial(),
            scale: model.radial_scale(),
            d1: given.len() as f64,
            quad: dens.quad_form(x1),
            ln_c: dens.ln_pdf_from_quad(0.0),
        })
    }

    pub fn quad_form(&self) -> f64 {
        self.quad
    }

    /// Log of the unnormalised density (`-inf` off the support).
    pub fn ln_unnormalized(&self, r: f64) -> f64 {
        if !(r > 0.0) || !r.is_finite() {
            return f64::NEG_INFINITY;
        }
        let lf = self.law.ln_pdf(r / self.scale) - self.scale.ln();
        lf + self.ln_c - 0.5 * self.quad / (r * r) - self.d1 * r.ln()
    }

    /// Normalised density, given `g(x_1)`.
    pub fn density(&self, r: f64, g_x1: f64) -> f64 {
        self.ln_unnormalized(r).exp() / g_x1
    }

    /// Starting point: the best of a grid of radial quantiles.
    fn start(&self) -> f64 {
        let mut best = (f64::NEG_INFINITY, self.scale * self.law.quantile_unchecked(0.5));
        for k in 1..400 {
            let t = k as f64 / 400.0;
            for p in [t, 1e-8f64.powf(1.0 - t)] {
                let r = self.scale * self.law.quantile_upper_unchecked(p);
                let v = self.ln_unnormalized(r);
                if v > best.0 {
                    best = (v, r);
                }
            }
        }
        best.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleChain {
    pub draws: Vec<f64>,
    /// Acceptance rate after burn-in.
    pub acceptance: f64,
}

/// Metropolis–Hastings draws of the scale given `X_given = x1`, by a
/// multiplicative random walk. Returns `n` draws after burn-in and thinning.
pub fn conditional_scale_sample(
    model: &MixtureModel,
    given: &[usize],
    x1: &[f64],
    mcmc: &McmcConfig,
    n: usize,
    seed: u64,
) -> Result<ScaleChain> {
    mcmc.validate()?;
    let target = ConditionalScaleLaw::new(model, given, x1)?;
    if let RadialLaw::Dirac { r0 } = *model.radial() {
        // every proposal away from r0 has zero target density
        return Ok(ScaleChain { draws: vec![r0 * model.radial_scale(); n], acceptance: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = target.start();
    let mut lp = target.ln_unnormalized(r);
    if !lp.is_finite() {
        return Err(Error::InvalidParameter("conditional scale density vanishes at the start".into()));
    }
    let mut accepted = 0usize;
    let mut steps = 0usize;
    let mut draws = Vec::with_capacity(n);
    let total = mcmc.burn_in + n * mcmc.thin;
    for it in 0..total {
        let e: f64 = rng.sample(StandardNormal);
        let prop = r * (mcmc.proposal_sd * e).exp();
        let lq = target.ln_unnormalized(prop);
        // the log-scale walk contributes the Jacobian r'/r
        let log_alpha = lq - lp + (prop / r).ln();
        let ok = lq.is_finite() && rng.gen::<f64>().ln() < log_alpha;
        if ok {
            r = prop;
            lp = lq;
        }
        if it >= mcmc.burn_in {
            steps += 1;
            accepted += ok as usize;
            if (it - mcmc.burn_in + 1) % mcmc.thin == 0 {
                draws.push(r);
            }
        }
    }
    let acceptance = if steps > 0 { accepted as f64 / steps as f64 } else { 0.0 };
    if !(0.05..=0.8).contains(&acceptance) && steps > 0 {
        log::warn!(
            "scale chain acceptance rate {acceptance:.3} outside [0.05, 0.8]; {} the proposal sd (now {})",
            if acceptance < 0.05 { "decrease" } else { "increase" },
            mcmc.proposal_sd
        );
    }
    Ok(ScaleChain { draws, acceptance })
}

/// Draws of `X_target | X_given = x1`, with `target` the complement of
/// `given`. Rows follow the order of `target()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSample {
    pub target: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
    pub acceptance: f64,
}

/// Two-step conditional simulation: a scale from the chain, then the
/// Gaussian conditional of `W_2` given `W_1 = x_1 / r`.
pub fn simulate_conditional(
    model: &MixtureModel,
    given: &[usize],
    x1: &[f64],
    n: usize,
    mcmc: &McmcConfig,
    seed: u64,
) -> Result<ConditionalSample> {
    let d = model.dim();
    let mut g = given.to_vec();
    g.sort_unstable();
    g.dedup();
    if g.len() != given.len() || g.iter().any(|&i| i >= d) {
        return Err(Error::InvalidParameter("invalid conditioning index set".into()));
    }
    if g.len() == d || x1.len() != given.len() {
        return Err(Error::InvalidParameter("need one value per conditioning site and at least one target".into()));
    }
    // keep x1 aligned with the sorted index set
    let x1s: Vec<f64> = g.iter().map(|i| x1[given.iter().position(|j| j == i).unwrap()]).collect();
    let blocks = CovarianceBlocks::new(model.sigma(), &g)?;
    let mu = blocks.conditional_mean(&x1s);
    let l = cholesky_lower(&blocks.schur)?;
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let chain = conditional_scale_sample(model, &g, &x1s, mcmc, n, seeder.gen())?;
    let base: u64 = seeder.gen();
    let rows: Vec<Vec<f64>> = chain
        .draws
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(base);
            rng.set_stream(i as u64);
            let z = DVector::from_fn(l.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
            // r (μ/r + L z) = μ + r L z
            let w = &l * z;
            (0..mu.len()).map(|a| mu[a] + r * w[a]).collect()
        })
        .collect();
    Ok(ConditionalSample { target: complement(d, &g), rows, acceptance: chain.acceptance })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMapSpec {
    pub probabilities: Vec<f64>,
    /// Conditional draws per map.
    pub n: usize,
    pub mcmc: McmcConfig,
    /// Report quantiles as marginal probabilities instead of raw values.
    pub uniform_scale: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    pub probabilities: Vec<f64>,
    /// `values[g][p]` at grid point `g`.
    pub values: Vec<Vec<f64>>,
    pub uniform_scale: bool,
}

/// Conditional quantiles over `grid` given values `x1` at `given_sites`.
/// Grid points that coincide with a conditioning site return its value.
pub fn conditional_quantile_map(
    radial: RadialLaw,
    correlation: &CorrelationModel,
    given_sites: &SiteSet,
    x1: &[f64],
    grid: &SiteSet,
    spec: &QuantileMapSpec,
) -> Result<QuantileMap> {
    if spec.n < 2 {
        return Err(Error::InvalidParameter("need at least two conditional draws".into()));
    }
    if spec.probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidParameter("quantile levels must lie in [0, 1]".into()));
    }
    if x1.len() != given_sites.len() {
        return Err(Error::InvalidParameter("one conditioning value per site required".into()));
    }
    let gc = given_sites.coords();
    let coincide: Vec<Option<usize>> = grid
        .coords()
        .iter()
        .map(|t| {
            (0..gc.len()).find(|&s| {
                let dx = t[0] - gc[s][0];
                let dy = t[1] - gc[s][1];
                (dx * dx + dy * dy).sqrt() < 1e-9
            })
        })
        .collect();
    let free: Vec<usize> = (0..grid.len()).filter(|&g| coincide[g].is_none()).collect();
    let rule = RadialRule::new(&radial, &crate::mixture::rule::RuleConfig::default())?;
    let out_scale = |x: f64| if spec.uniform_scale { rule.marginal_cdf(x) } else { x };
    let np = spec.probabilities.len();
    let mut values = vec![Vec::new(); grid.len()];
    if !free.is_empty() {
        let mut coords = gc.to_vec();
        let mut labels: Vec<String> = (0..gc.len()).map(|i| format!("c{i}")).collect();
        for &g in &free {
            coords.push(grid.coords()[g]);
            labels.push(format!("g{g}"));
        }
        let model = MixtureModel::new(radial, *correlation, SiteSet::new(coords, labels)?)?;
        let given: Vec<usize> = (0..gc.len()).collect();
        let sample = simulate_conditional(&model, &given, x1, spec.n, &spec.mcmc, spec.seed)?;
        for (a, &g) in free.iter().enumerate() {
            let mut col: Vec<f64> = sample.rows.iter().map(|r| r[a]).collect();
            col.sort_by(f64::total_cmp);
            values[g] = spec.probabilities.iter().map(|&p| out_scale(empirical_quantile(&col, p))).collect();
        }
    }
    for (g, c) in coincide.iter().enumerate() {
        if let Some(s) = c {
            values[g] = vec![out_scale(x1[*s]); np];
        }
    }
    Ok(QuantileMap { probabilities: spec.probabilities.clone(), values, uniform_scale: spec.uniform_scale })
}

#[cfg(test)]
mod tests;
