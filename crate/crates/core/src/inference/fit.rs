//! Maximum censored pseudo-likelihood fits.

use super::data::{rank_transform, Dataset, PseudoUniformData};
use super::likelihood::{censored_loglik, CensorConfig, LikelihoodConfig};
use crate::error::{Error, Result};
use crate::mixture::{Family, ParamVector};
use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub starts: usize,
    pub max_iter: u64,
    /// Stop once the standard deviation of `-ℓ` over the simplex falls below this.
    pub sd_tolerance: f64,
    /// Edge length of the initial simplex on the unconstrained scale.
    pub initial_step: f64,
    /// Spread of the random extra starts on the unconstrained scale.
    pub start_spread: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self { starts: 3, max_iter: 500, sd_tolerance: 1e-4, initial_step: 0.4, start_spread: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub censor: CensorConfig,
    pub likelihood: LikelihoodConfig,
    pub optim: OptimConfig,
    pub seed: u64,
    /// For Model 2 with free `β`, also fit the boundary model `β = 0`.
    pub boundary_refit: bool,
}

impl FitOptions {
    pub fn new(censor: CensorConfig) -> Self {
        Self {
            censor,
            likelihood: LikelihoodConfig::default(),
            optim: OptimConfig::default(),
            seed: 0,
            boundary_refit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: Vec<f64>,
    pub loglik: Option<f64>,
    pub iterations: u64,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub psi: ParamVector,
    pub loglik: f64,
    pub aic: f64,
    pub n_free: usize,
    pub iterations: u64,
    pub evaluations: usize,
    pub converged: bool,
    pub starts: Vec<StartSummary>,
    /// The `β = 0` fit of Model 2, reported next to the unrestricted one.
    pub restricted: Option<Box<FitResult>>,
    pub intervals: Option<Vec<Interval>>,
    pub seed: u64,
    pub version: String,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.psi.get(name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn aic(loglik: f64, n_free: usize) -> f64 {
    2.0 * n_free as f64 - 2.0 * loglik
}

/// Objective on the unconstrained scale. Failed evaluations get a large
/// finite value so the simplex moves away from them.
struct Objective<'a> {
    base: &'a ParamVector,
    data: &'a PseudoUniformData,
    censor: &'a CensorConfig,
    cfg: &'a LikelihoodConfig,
    evals: &'a AtomicUsize,
}

const PENALTY: f64 = 1e12;

impl Objective<'_> {
    fn value(&self, z: &[f64]) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let psi = self.base.from_unconstrained(z)?;
        censored_loglik(&psi, self.data, self.censor, self.cfg)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, z: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(match self.value(z) {
            Ok(l) if l.is_finite() => -l,
            _ => PENALTY * (1.0 + z.iter().map(|v| v * v).sum::<f64>()),
        })
    }
}

fn unstructured_starts(spec: &ParamVector, opts: &OptimConfig, seed: u64) -> Vec<Vec<f64>> {
    let z0 = spec.to_unconstrained();
    let mut out = vec![z0.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if spec.family == Family::Model3 && !spec.is_fixed("beta") {
        // one start on each side of β = 0
        let k = spec.free_names().iter().position(|n| *n == "beta").unwrap();
        let b = spec.get("beta").unwrap();
        let p = spec.spec("beta").unwrap();
        let mut other = z0.clone();
        other[k] = p.to_unconstrained(if b > 0.0 { -b.abs().max(0.5) } else { b.abs().max(0.5) });
        out.push(other);
    }
    while out.len() < opts.starts.max(1) {
        let z: Vec<f64> = z0.iter().map(|v| v + opts.start_spread * rng.sample::<f64, _>(StandardNormal)).collect();
        out.push(z);
    }
    out.truncate(opts.starts.max(1).max(if spec.family == Family::Model3 { 2 } else { 1 }));
    out
}

fn simplex(z: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut s = vec![z.to_vec()];
    for i in 0..z.len() {
        let mut v = z.to_vec();
        v[i] += step;
        s.push(v);
    }
    s
}

/// Fits starting from `spec` (its values are the first start; fixed entries
/// stay fixed) on data already on the uniform scale.
pub fn fit_uniform(data: &PseudoUniformData, spec: &ParamVector, opts: &FitOptions) -> Result<FitResult> {
    let n_free = spec.n_free();
    if n_free == 0 {
        return Err(Error::InvalidParameter("nothing to fit: every parameter is fixed".into()));
    }
    opts.censor.validate(data.dim())?;
    let evals = AtomicUsize::new(0);
    let mut summaries = Vec::new();
    let mut best: Option<(f64, Vec<f64>, u64, bool)> = None;
    for z0 in unstructured_starts(spec, &opts.optim, opts.seed) {
        let run = || -> std::result::Result<(f64, Vec<f64>, u64, bool), argmin::core::Error> {
            let solver = NelderMead::new(simplex(&z0, opts.optim.initial_step)).with_sd_tolerance(opts.optim.sd_tolerance)?;
            let obj = Objective { base: spec, data, censor: &opts.censor, cfg: &opts.likelihood, evals: &evals };
            let res = Executor::new(obj, solver).configure(|s| s.max_iters(opts.optim.max_iter)).run()?;
            let st = res.state();
            let z = st.get_best_param().cloned().unwrap_or_else(|| z0.clone());
            let converged = matches!(st.get_termination_reason(), Some(TerminationReason::SolverConverged));
            Ok((st.get_best_cost(), z, st.get_iter(), converged))
        };
        let start = spec.from_unconstrained(&z0).map(|p| p.values()).unwrap_or_default();
        match run() {
            Ok((cost, z, iters, conv)) if cost < PENALTY => {
                summaries.push(StartSummary { start, loglik: Some(-cost), iterations: iters, converged: conv, error: None });
                if best.as_ref().map(|b| cost < b.0).unwrap_or(true) {
                    best = Some((cost, z, iters, conv));
                }
            }
            Ok((_, _, iters, _)) => summaries.push(StartSummary {
                start,
                loglik: None,
                iterations: iters,
                converged: false,
                error: Some("no finite likelihood found".into()),
            }),
            Err(e) => summaries.push(StartSummary { start, loglik: None, iterations: 0, converged: false, error: Some(e.to_string()) }),
        }
    }
    let Some((cost, z, iterations, converged)) = best else {
        let trace = serde_json::to_string(&summaries).unwrap_or_default();
        return Err(Error::Optimisation(format!("all starts failed: {trace}")));
    };
    let mut psi = spec.from_unconstrained(&z)?;
    psi.canonicalize()?;
    // re-evaluate at the reported point so ℓ matches ψ̂ exactly
    let loglik = censored_loglik(&psi, data, &opts.censor, &opts.likelihood).unwrap_or(-cost);
    let mut result = FitResult {
        family: spec.family,
        psi,
        loglik,
        aic: aic(loglik, n_free),
        n_free,
        iterations,
        evaluations: evals.load(Ordering::Relaxed),
        converged,
        starts: summaries,
        restricted: None,
        intervals: None,
        seed: opts.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    if opts.boundary_refit && spec.family == Family::Model2 && !spec.is_fixed("beta") {
        let mut r = spec.clone();
        r.fix("beta", 0.0)?;
        let mut o = opts.clone();
        o.boundary_refit = false;
        if r.n_free() > 0 {
            result.restricted = Some(Box::new(fit_uniform(data, &r, &o)?));
        }
    }
    Ok(result)
}

/// Rank-transforms `data` and fits.
pub fn fit(data: &Dataset, spec: &ParamVector, opts: &FitOptions) -> Result<FitResult> {
    if spec.is_empty() {
        return Err(Error::InvalidParameter("empty parameter vector".into()));
    }
    let u = rank_transform(data)?;
    fit_uniform(&u, spec, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub value: f64,
    pub loglik: Option<f64>,
    pub psi: Option<ParamVector>,
    pub error: Option<String>,
}

/// Maximised `ℓ` with `name` pinned at each grid value, warm-starting each
/// point from the previous optimum.
pub fn profile_loglik(
    data: &PseudoUniformData,
    spec: &ParamVector,
    name: &str,
    grid: &[f64],
    opts: &FitOptions,
) -> Result<Vec<ProfilePoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("profile grid is empty".into()));
    }
    spec.spec(name).ok_or_else(|| Error::InvalidParameter(format!("no parameter '{name}'")))?;
    let mut o = opts.clone();
    o.boundary_refit = false;
    let mut warm = spec.clone();
    let mut out = Vec::with_capacity(grid.len());
    for &v in grid {
        let mut s = warm.clone();
        let point = match s.fix(name, v) {
            Err(e) => ProfilePoint { value: v, loglik: None, psi: None, error: Some(e.to_string()) },
            Ok(()) if s.n_free() == 0 => match censored_loglik(&s, data, &o.censor, &o.likelihood) {
                Ok(l) => ProfilePoint { value: v, loglik: Some(l), psi: Some(s), error: None },
                Err(e) => ProfilePoint { value: v, loglik: None, psi: None, error: Some(e.to_string()) },
            },
            Ok(()) => match fit_uniform(data, &s, &o) {
                Ok(f) => {
                    warm = f.psi.clone();
                    warm.release(name)?;
                    ProfilePoint { value: v, loglik: Some(f.loglik), psi: Some(f.psi), error: None }
                }
                Err(e) => ProfilePoint { value: v, loglik: None, psi: None, error: Some(e.to_string()) },
            },
        };
        out.push(point);
    }
    Ok(out)
}
