//! Repeated simulate, rank and fit experiments.

use super::data::{rank_transform, Dataset};
use super::fit::{fit, FitOptions};
use super::likelihood::CensorConfig;
use crate::error::{Error, Result};
use crate::gaussian::sites::SiteSet;
use crate::mixture::{Family, MixtureModel, ParamVector};
use crate::simulation::{empirical_quantile, simulate};
use crate::taildep::{chi_u, chibar_u, empirical_chi_u};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Generating model.
    pub truth: ParamVector,
    /// Fitted family, with start values and any fixed entries.
    pub spec: ParamVector,
    pub d: usize,
    pub n: usize,
    pub threshold: f64,
    /// Separation of an extra site pair used for tail curves.
    pub pair_distance: Option<f64>,
    pub levels: Vec<f64>,
}

fn model2(beta: f64, gamma: f64, range: f64, smoothness: f64) -> ParamVector {
    let mut p = ParamVector::new(Family::Model2, false);
    p.set("beta", beta).unwrap();
    p.set("gamma", gamma).unwrap();
    p.set("range", range).unwrap();
    p.set("smoothness", smoothness).unwrap();
    p
}

impl Scenario {
    /// Model 2 data fitted with Model 2, started at the defaults.
    pub fn model2(beta: f64, range: f64, d: usize, n: usize) -> Self {
        Self {
            name: format!("model2_beta{beta}_range{range}_d{d}"),
            truth: model2(beta, 1.0, range, 1.0),
            spec: ParamVector::new(Family::Model2, false),
            d,
            n,
            threshold: 0.95,
            pair_distance: Some(0.5),
            levels: default_levels(),
        }
    }

    /// Student-t data fitted with Model 2.
    pub fn misspecified_student(df: f64, range: f64, d: usize, n: usize) -> Self {
        let mut truth = ParamVector::new(Family::Student, false);
        truth.set("df", df).unwrap();
        truth.set("range", range).unwrap();
        Self {
            name: format!("student_df{df}_range{range}_d{d}"),
            truth,
            spec: ParamVector::new(Family::Model2, false),
            d,
            n,
            threshold: 0.95,
            pair_distance: Some(0.5),
            levels: default_levels(),
        }
    }

    /// The grid `β ∈ {0, 0.5, 1}`, `λ ∈ {0.5, 1}`, `γ = ν = 1`.
    pub fn table_grid(d: usize, n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for beta in [0.0, 0.5, 1.0] {
            for range in [0.5, 1.0] {
                out.push(Self::model2(beta, range, d, n));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.n < 2 {
            return Err(Error::InvalidParameter(format!("scenario {}: need d >= 2 and n >= 2", self.name)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter(format!("scenario {}: threshold outside (0,1)", self.name)));
        }
        if let Some(h) = self.pair_distance {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::InvalidParameter(format!("scenario {}: pair distance must lie in (0,1)", self.name)));
            }
        }
        if self.levels.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
            return Err(Error::InvalidParameter(format!("scenario {}: levels must lie in (0,1)", self.name)));
        }
        self.truth.radial_law()?;
        self.truth.correlation_model()?;
        Ok(())
    }
}

pub fn default_levels() -> Vec<f64> {
    (0..=9).map(|i| 0.9 + 0.01 * i as f64).chain([0.995, 0.999]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub reps: usize,
    pub seed: u64,
    pub fit: FitOptions,
    /// Monte Carlo pair datasets behind the envelope of the true curve.
    pub truth_envelope_reps: usize,
}

impl StudyConfig {
    pub fn new(reps: usize, seed: u64) -> Self {
        let mut fit = FitOptions::new(CensorConfig { thresholds: vec![] });
        fit.boundary_refit = false;
        Self { reps, seed, fit, truth_envelope_reps: 500 }
    }
}

/// Seed of task `(cell, rep)` from the master seed.
pub fn task_seed(master: u64, cell: u64, rep: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((cell << 32) | rep);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub seed: u64,
    pub estimate: Option<Vec<f64>>,
    pub loglik: Option<f64>,
    pub error: Option<String>,
    /// Fitted curves at the scenario levels for the extra pair.
    pub chi_fit: Option<Vec<f64>>,
    pub chibar_fit: Option<Vec<f64>>,
    /// Empirical curves on the extra pair; `NaN` where undefined.
    pub chi_emp: Vec<f64>,
    pub chibar_emp: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
}

impl Band {
    pub fn from_values(vals: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = vals.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        Some(Self { lo: empirical_quantile(&v, 0.025), hi: empirical_quantile(&v, 0.975), mean })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCurves {
    pub chi: Vec<f64>,
    pub chibar: Vec<f64>,
    /// Spread of the empirical curves over pair datasets from the truth.
    pub chi_band: Vec<Option<Band>>,
    pub chibar_band: Vec<Option<Band>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: Scenario,
    pub names: Vec<String>,
    pub reps: Vec<RepOutcome>,
    pub truth_curves: Option<TruthCurves>,
}

impl CellResult {
    pub fn failures(&self) -> usize {
        self.reps.iter().filter(|r| r.estimate.is_none()).count()
    }

    pub fn incomplete(&self) -> bool {
        self.failures() > 0
    }

    /// Bias, SD and RMSE per fitted parameter. Parameters absent from the
    /// generating model get a `NaN` truth.
    pub fn summary(&self) -> Vec<ParamSummary> {
        let ok: Vec<&Vec<f64>> = self.reps.iter().filter_map(|r| r.estimate.as_ref()).collect();
        self.names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let truth = self.scenario.truth.get(name).unwrap_or(f64::NAN);
                let vals: Vec<f64> = ok.iter().map(|v| v[k]).collect();
                let m = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / m;
                let sd = if vals.len() > 1 {
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
                } else {
                    0.0
                };
                let bias = mean - truth;
                ParamSummary {
                    name: name.clone(),
                    truth,
                    bias,
                    sd,
                    rmse: (bias * bias + sd * sd).sqrt(),
                    n: vals.len(),
                }
            })
            .collect()
    }

    /// Per level: bands of the fitted and empirical curves over replicates.
    pub fn envelopes(&self) -> Vec<EnvelopeRow> {
        let mut rows = Vec::new();
        for (j, &u) in self.scenario.levels.iter().enumerate() {
            for measure in ["chi", "chibar"] {
                let pick_fit = |r: &RepOutcome| {
                    let c = if measure == "chi" { &r.chi_fit } else { &r.chibar_fit };
                    c.as_ref().map(|v| v[j])
                };
                let fitted: Vec<f64> = self.reps.iter().filter_map(pick_fit).collect();
                let emp: Vec<f64> = self
                    .reps
                    .iter()
                    .map(|r| if measure == "chi" { r.chi_emp[j] } else { r.chibar_emp[j] })
                    .collect();
                let (truth, truth_band) = match &self.truth_curves {
                    Some(t) if measure == "chi" => (t.chi[j], t.chi_band.get(j).cloned().flatten()),
                    Some(t) => (t.chibar[j], t.chibar_band.get(j).cloned().flatten()),
                    None => (f64::NAN, None),
                };
                rows.push(EnvelopeRow {
                    measure,
                    u,
                    truth,
                    truth_band,
                    fitted: Band::from_values(&fitted),
                    empirical: Band::from_values(&emp),
                });
            }
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRow {
    pub measure: &'static str,
    pub u: f64,
    pub truth: f64,
    pub truth_band: Option<Band>,
    pub fitted: Option<Band>,
    pub empirical: Option<Band>,
}

/// Sites for one replicate: `d` uniform sites in the unit square and, when
/// requested, a pair at distance `h` placed at random inside it.
pub fn replicate_sites(d: usize, pair_distance: Option<f64>, seed: u64) -> Result<SiteSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<[f64; 2]> = (0..d).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let mut labels: Vec<String> = (1..=d).map(|i| format!("s{i}")).collect();
    if let Some(h) = pair_distance {
        let th = rng.gen::<f64>() * PI;
        let (dx, dy) = (0.5 * h * th.cos(), 0.5 * h * th.sin());
        let lo = 0.5 * h;
        let c = [lo + rng.gen::<f64>() * (1.0 - 2.0 * lo), lo + rng.gen::<f64>() * (1.0 - 2.0 * lo)];
        coords.push([c[0] - dx, c[1] - dy]);
        coords.push([c[0] + dx, c[1] + dy]);
        labels.push("pair_a".into());
        labels.push("pair_b".into());
    }
    SiteSet::new(coords, labels)
}

fn pair_sites(h: f64) -> Result<SiteSet> {
    SiteSet::from_coords(vec![[0.0, 0.0], [h, 0.0]])
}

fn pair_model(psi: &ParamVector, h: f64) -> Result<MixtureModel> {
    psi.model(&pair_sites(h)?)
}

fn model_curves(psi: &ParamVector, h: f64, levels: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = pair_model(psi, h)?;
    let chi = levels.iter().map(|&u| chi_u(&m, u)).collect::<Result<Vec<_>>>()?;
    let chibar = levels.iter().map(|&u| chibar_u(&m, u)).collect::<Result<Vec<_>>>()?;
    Ok((chi, chibar))
}

fn empirical_curves(pairs: &[(Option<f64>, Option<f64>)], levels: &[f64]) -> (Vec<f64>, Vec<f64>) {
    levels
        .iter()
        .map(|&u| match empirical_chi_u(pairs, u) {
            Ok(e) => (e.chi, e.chibar.unwrap_or(f64::NAN)),
            Err(_) => (f64::NAN, f64::NAN),
        })
        .unzip()
}

/// Model curves of the truth plus the spread of empirical curves on `reps`
/// pair datasets of size `n` drawn from it.
pub fn truth_curves(sc: &Scenario, reps: usize, seed: u64) -> Result<Option<TruthCurves>> {
    let Some(h) = sc.pair_distance else {
        return Ok(None);
    };
    let (chi, chibar) = model_curves(&sc.truth, h, &sc.levels)?;
    let model = pair_model(&sc.truth, h)?;
    let sims: Vec<(Vec<f64>, Vec<f64>)> = (0..reps)
        .into_par_iter()
        .map(|b| {
            let x = simulate(&model, sc.n, task_seed(seed, u32::MAX as u64, b as u64))?;
            let data = Dataset::from_matrix(&x, pair_sites(h)?)?;
            let u = rank_transform(&data)?;
            Ok(empirical_curves(&u.pairs(0, 1), &sc.levels))
        })
        .collect::<Result<Vec<_>>>()?;
    let band = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Vec<Option<Band>> {
        (0..sc.levels.len())
            .map(|j| Band::from_values(&sims.iter().map(|s| pick(s)[j]).collect::<Vec<_>>()))
            .collect()
    };
    let chi_band = if reps > 0 { band(|s| &s.0) } else { vec![None; sc.levels.len()] };
    let chibar_band = if reps > 0 { band(|s| &s.1) } else { vec![None; sc.levels.len()] };
    Ok(Some(TruthCurves { chi, chibar, chi_band, chibar_band }))
}

/// One replicate of a scenario.
pub fn run_replicate(sc: &Scenario, fit_opts: &FitOptions, rep: usize, seed: u64) -> RepOutcome {
    let mut out = RepOutcome {
        rep,
        seed,
        estimate: None,
        loglik: None,
        error: None,
        chi_fit: None,
        chibar_fit: None,
        chi_emp: vec![f64::NAN; sc.levels.len()],
        chibar_emp: vec![f64::NAN; sc.levels.len()],
    };
    let mut emp = None;
    let mut run = || -> Result<(ParamVector, f64)> {
        let sites = replicate_sites(sc.d, sc.pair_distance, seed)?;
        let x = simulate(&sc.truth.model(&sites)?, sc.n, seed ^ 0x5eed)?;
        let all = Dataset::from_matrix(&x, sites)?;
        if sc.pair_distance.is_some() {
            let pair = rank_transform(&all.select_sites(&[sc.d, sc.d + 1])?)?;
            emp = Some(empirical_curves(&pair.pairs(0, 1), &sc.levels));
        }
        let data = all.select_sites(&(0..sc.d).collect::<Vec<_>>())?;
        let mut o = fit_opts.clone();
        o.censor = CensorConfig::uniform(sc.d, sc.threshold)?;
        o.seed = seed;
        let f = fit(&data, &sc.spec, &o)?;
        Ok((f.psi, f.loglik))
    };
    let res = run();
    if let Some((c, cb)) = emp {
        out.chi_emp = c;
        out.chibar_emp = cb;
    }
    match res {
        Ok((psi, l)) => {
            out.estimate = Some(psi.values());
            out.loglik = Some(l);
            if let Some(h) = sc.pair_distance {
                match model_curves(&psi, h, &sc.levels) {
                    Ok((c, cb)) => {
                        out.chi_fit = Some(c);
                        out.chibar_fit = Some(cb);
                    }
                    Err(e) => out.error = Some(format!("tail curves: {e}")),
                }
            }
        }
        Err(e) => {
            log::warn!("{} replicate {rep} failed: {e}", sc.name);
            out.error = Some(e.to_string());
        }
    }
    out
}

/// Runs every scenario `cfg.reps` times, in parallel over replicates.
pub fn simulation_study(scenarios: &[Scenario], cfg: &StudyConfig) -> Result<Vec<CellResult>> {
    if scenarios.is_empty() {
        return Err(Error::InvalidParameter("no scenarios given".into()));
    }
    for sc in scenarios {
        sc.validate()?;
    }
    let mut cells = Vec::with_capacity(scenarios.len());
    for (c, sc) in scenarios.iter().enumerate() {
        let reps: Vec<RepOutcome> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| run_replicate(sc, &cfg.fit, r, task_seed(cfg.seed, c as u64, r as u64)))
            .collect();
        let truth = truth_curves(sc, cfg.truth_envelope_reps, task_seed(cfg.seed, c as u64, u32::MAX as u64))?;
        cells.push(CellResult {
            scenario: sc.clone(),
            names: sc.spec.names().iter().map(|s| s.to_string()).collect(),
            reps,
            truth_curves: truth,
        });
    }
    Ok(cells)
}

/// `scenario,parameter,truth,bias_x100,sd_x100,rmse_x100,successes,failures,incomplete`.
pub fn write_table_csv<W: Write>(cells: &[CellResult], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["scenario", "parameter", "truth", "bias_x100", "sd_x100", "rmse_x100", "successes", "failures", "incomplete"])?;
    for c in cells {
        for s in c.summary() {
            wr.write_record([
                c.scenario.name.clone(),
                s.name,
                s.truth.to_string(),
                (100.0 * s.bias).to_string(),
                (100.0 * s.sd).to_string(),
                (100.0 * s.rmse).to_string(),
                s.n.to_string(),
                c.failures().to_string(),
                c.incomplete().to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Fitted, empirical and true curves per level with 95% envelopes.
pub fn write_envelope_csv<W: Write>(cells: &[CellResult], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "scenario", "measure", "u", "truth", "truth_lo", "truth_hi", "fit_mean", "fit_lo", "fit_hi", "emp_mean", "emp_lo", "emp_hi",
    ])?;
    let f = |b: &Option<Band>| -> [String; 3] {
        match b {
            Some(b) => [b.mean.to_string(), b.lo.to_string(), b.hi.to_string()],
            None => [String::new(), String::new(), String::new()],
        }
    };
    for c in cells {
        for r in c.envelopes() {
            let t = f(&r.truth_band);
            let fb = f(&r.fitted);
            let e = f(&r.empirical);
            wr.write_record([
                c.scenario.name.clone(),
                r.measure.to_string(),
                r.u.to_string(),
                r.truth.to_string(),
                t[1].clone(),
                t[2].clone(),
                fb[0].clone(),
                fb[1].clone(),
                fb[2].clone(),
                e[0].clone(),
                e[1].clone(),
                e[2].clone(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}
