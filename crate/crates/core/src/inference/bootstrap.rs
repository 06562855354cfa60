//! Temporal block bootstrap for fitted parameters.

use super::data::Dataset;
use super::fit::{fit, FitOptions, Interval};
use crate::error::{Error, Result};
use crate::mixture::ParamVector;
use crate::simulation::empirical_quantile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of consecutive time stamps per block.
    pub block_length: i64,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
    /// Intervals are reported only when at least this share of refits succeed.
    pub min_success: f64,
}

impl BootstrapConfig {
    pub fn new(block_length: i64, reps: usize, seed: u64) -> Self {
        Self { block_length, reps, seed, level: 0.95, min_success: 0.8 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_length < 1 {
            return Err(Error::InvalidParameter("block length must be at least 1".into()));
        }
        if self.reps < 2 {
            return Err(Error::InvalidParameter("bootstrap needs at least 2 replicates".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidParameter("interval level must lie in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub names: Vec<String>,
    /// Fitted values per replicate, `None` for failed refits.
    pub estimates: Vec<Option<Vec<f64>>>,
    pub failures: Vec<(usize, String)>,
    /// Percentile intervals, absent when too few refits succeeded.
    pub intervals: Option<Vec<Interval>>,
}

impl BootstrapResult {
    pub fn successes(&self) -> usize {
        self.estimates.iter().filter(|e| e.is_some()).count()
    }
}

/// Row indices of consecutive time windows `[t0 + bL, t0 + (b+1)L)`.
pub fn time_blocks(time: &[i64], block_length: i64) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let Some(&t0) = time.first() else {
        return blocks;
    };
    let mut current = i64::MIN;
    for (i, &t) in time.iter().enumerate() {
        let b = (t - t0).div_euclid(block_length);
        if b != current {
            blocks.push(Vec::new());
            current = b;
        }
        blocks.last_mut().unwrap().push(i);
    }
    blocks
}

/// Whole blocks drawn with replacement until `n` rows are collected; the last
/// block is cut to length.
pub fn resample_blocks(blocks: &[Vec<usize>], n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let b = &blocks[rng.gen_range(0..blocks.len())];
        rows.extend(b.iter().take(n - rows.len()));
    }
    rows
}

/// Refits `spec` on block-resampled copies of `data`. Missing cells travel
/// with their rows, so each block keeps its missing pattern.
pub fn block_bootstrap(data: &Dataset, spec: &ParamVector, opts: &FitOptions, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    cfg.validate()?;
    let blocks = time_blocks(data.time(), cfg.block_length);
    let mut o = opts.clone();
    o.boundary_refit = false;
    let outcomes: Vec<Result<Vec<f64>>> = (0..cfg.reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let rows = resample_blocks(&blocks, data.n(), &mut rng);
            let resampled = data.resample_rows(&rows)?;
            Ok(fit(&resampled, spec, &o)?.psi.values())
        })
        .collect();
    let names: Vec<String> = spec.names().iter().map(|s| s.to_string()).collect();
    let mut estimates = Vec::with_capacity(cfg.reps);
    let mut failures = Vec::new();
    for (b, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(v) => estimates.push(Some(v)),
            Err(e) => {
                log::warn!("bootstrap replicate {b} failed: {e}");
                failures.push((b, e.to_string()));
                estimates.push(None);
            }
        }
    }
    let ok: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
    let intervals = if ok.len() as f64 >= cfg.min_success * cfg.reps as f64 && !ok.is_empty() {
        let a = 0.5 * (1.0 - cfg.level);
        Some(
            names
                .iter()
                .enumerate()
                .map(|(k, name)| {
                    let mut col: Vec<f64> = ok.iter().map(|v| v[k]).collect();
                    col.sort_by(f64::total_cmp);
                    Interval {
                        name: name.clone(),
                        lower: empirical_quantile(&col, a),
                        upper: empirical_quantile(&col, 1.0 - a),
                    }
                })
                .collect(),
        )
    } else {
        log::warn!("only {} of {} bootstrap refits succeeded; no intervals", ok.len(), cfg.reps);
        None
    };
    Ok(BootstrapResult { names, estimates, failures, intervals })
}
