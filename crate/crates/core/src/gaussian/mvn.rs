//! Multivariate normal orthant probabilities by randomized quasi-Monte Carlo.
//!
//! The integrand is the Genz sequential-conditioning transform with
//! Genz–Bretz variable priority ordering. Points come from a Richtmyer
//! (Kronecker) sequence with square roots of primes as generators, each
//! randomly shifted and folded with the baker's transform. Independent
//! shifts give an unbiased estimate and its standard error.

use super::normal::{norm_cdf, norm_pdf, norm_ppf};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvnConfig {
    /// Target standard error of the estimate.
    pub target_se: f64,
    /// Number of independent random shifts.
    pub shifts: usize,
    pub initial_points: usize,
    /// Budget of points per shift.
    pub max_points: usize,
}

impl Default for MvnConfig {
    fn default() -> Self {
        Self {
            target_se: 1e-4,
            shifts: 10,
            initial_points: 256,
            max_points: 1 << 18,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvnCdfEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    /// False when the point budget ran out before the target was met.
    pub converged: bool,
}

impl MvnCdfEstimate {
    fn exact(value: f64, seed: u64) -> Self {
        Self { value, std_error: 0.0, samples: 0, seed, converged: true }
    }
}

/// The first `n` primes.
pub fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Richtmyer sequence `k ↦ frac(k √p_j + Δ_j)` followed by the baker's transform.
#[derive(Debug, Clone)]
pub struct Lattice {
    gens: Vec<f64>,
}

impl Lattice {
    pub fn new(dim: usize) -> Self {
        let gens = primes(dim).into_iter().map(|p| (p as f64).sqrt().fract()).collect();
        Self { gens }
    }

    pub fn dim(&self) -> usize {
        self.gens.len()
    }

    #[inline]
    pub fn point(&self, k: usize, shift: &[f64], out: &mut [f64]) {
        let kf = k as f64;
        for ((o, g), s) in out.iter_mut().zip(&self.gens).zip(shift) {
            let x = (kf * g + s).fract();
            let t = 1.0 - (2.0 * x - 1.0).abs();
            *o = t.clamp(1e-16, 1.0 - 1e-16);
        }
    }
}

/// Prepared Genz integrand for `Pr(Z <= s·b)`, `Z ~ N(0, Σ)`.
#[derive(Debug, Clone)]
pub struct GenzIntegrand {
    n: usize,
    l: Vec<f64>,
    b: Vec<f64>,
    order: Vec<usize>,
}

impl GenzIntegrand {
    /// Reorders the variables and factorises Σ. Bounds may be `+inf`.
    pub fn new(upper: &[f64], sigma: &DMatrix<f64>) -> Result<Self> {
        let n = upper.len();
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::InvalidParameter("bound and matrix dimensions differ".into()));
        }
        let mut c = sigma.clone();
        let mut b = upper.to_vec();
        let mut order: Vec<usize> = (0..n).collect();
        let mut y = vec![0.0; n];
        for i in 0..n {
            // choose the most constraining remaining variable
            let mut best = i;
            let mut best_p = f64::INFINITY;
            for j in i..n {
                let mut t = 0.0;
                let mut ss = 0.0;
                for k in 0..i {
                    t += c[(j, k)] * y[k];
                    ss += c[(j, k)] * c[(j, k)];
                }
                let v = c[(j, j)] - ss;
                let p = if v > 0.0 { norm_cdf((b[j] - t) / v.sqrt()) } else { 1.0 };
                if p < best_p {
                    best_p = p;
                    best = j;
                }
            }
            if best != i {
                c.swap_rows(i, best);
                c.swap_columns(i, best);
                b.swap(i, best);
                order.swap(i, best);
            }
            let ss: f64 = (0..i).map(|k| c[(i, k)] * c[(i, k)]).sum();
            let v = c[(i, i)] - ss;
            if !(v > 1e-14 * sigma[(order[i], order[i])].max(1e-300)) {
                return Err(Error::SingularMatrix("Gaussian CDF covariance is not positive definite".into()));
            }
            let lii = v.sqrt();
            c[(i, i)] = lii;
            for r in i + 1..n {
                let mut s = c[(r, i)];
                for k in 0..i {
                    s -= c[(r, k)] * c[(i, k)];
                }
                c[(r, i)] = s / lii;
            }
            let t: f64 = (0..i).map(|k| c[(i, k)] * y[k]).sum();
            let bt = (b[i] - t) / lii;
            // truncated-normal mean E[Z | Z < bt]
            let p = norm_cdf(bt);
            y[i] = if p > 1e-300 { -norm_pdf(bt) / p } else { bt };
            if !y[i].is_finite() {
                y[i] = 0.0;
            }
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..=i {
                l[i * n + k] = c[(i, k)];
            }
        }
        Ok(Self { n, l, b, order })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of quasi-random coordinates consumed by [`Self::eval`].
    pub fn qmc_dim(&self) -> usize {
        self.n.saturating_sub(1)
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Integrand value at `w ∈ (0,1)^{n-1}` with bounds scaled by `s`.
    /// `y` is scratch of length `n`.
    #[inline]
    pub fn eval(&self, w: &[f64], s: f64, y: &mut [f64]) -> f64 {
        let n = self.n;
        let mut prod = 1.0;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i + 1];
            let mut t = 0.0;
            for k in 0..i {
                t += row[k] * y[k];
            }
            let e = norm_cdf((s * self.b[i] - t) / row[i]);
            prod *= e;
            if prod == 0.0 {
                return 0.0;
            }
            if i + 1 < n {
                y[i] = norm_ppf((w[i] * e).max(1e-300));
            }
        }
        prod
    }
}

/// Unbiased estimate of `Pr(Z <= upper)` for `Z ~ N(0, Σ)`.
pub fn mvn_cdf(upper: &[f64], sigma: &DMatrix<f64>, target_se: f64, seed: u64) -> Result<MvnCdfEstimate> {
    let cfg = MvnConfig { target_se, ..MvnConfig::default() };
    mvn_cdf_with(upper, sigma, &cfg, seed)
}

pub fn mvn_cdf_with(upper: &[f64], sigma: &DMatrix<f64>, cfg: &MvnConfig, seed: u64) -> Result<MvnCdfEstimate> {
    if !(cfg.target_se > 0.0) {
        return Err(Error::InvalidParameter("accuracy target must be positive".into()));
    }
    if upper.is_empty() {
        return Err(Error::InvalidParameter("empty bound vector".into()));
    }
    if sigma.nrows() != upper.len() || sigma.ncols() != upper.len() {
        return Err(Error::InvalidParameter("bound and matrix dimensions differ".into()));
    }
    if upper.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN bound".into()));
    }
    if upper.iter().any(|&v| v == f64::NEG_INFINITY) {
        return Ok(MvnCdfEstimate::exact(0.0, seed));
    }
    let keep: Vec<usize> = (0..upper.len()).filter(|&i| upper[i].is_finite()).collect();
    if keep.is_empty() {
        return Ok(MvnCdfEstimate::exact(1.0, seed));
    }
    let sub = super::matrix::select(sigma, &keep, &keep);
    let b: Vec<f64> = keep.iter().map(|&i| upper[i]).collect();
    if keep.len() == 1 {
        if !(sub[(0, 0)] > 0.0) {
            return Err(Error::SingularMatrix("non-positive variance".into()));
        }
        return Ok(MvnCdfEstimate::exact(norm_cdf(b[0] / sub[(0, 0)].sqrt()), seed));
    }
    let f = GenzIntegrand::new(&b, &sub)?;
    let m = cfg.shifts.max(2);
    let q = f.qmc_dim();
    let lattice = Lattice::new(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<Vec<f64>> = (0..m).map(|_| (0..q).map(|_| rng.gen::<f64>()).collect()).collect();

    let mut sums = vec![0.0; m];
    let mut w = vec![0.0; q];
    let mut y = vec![0.0; f.dim()];
    let mut done = 0usize;
    let mut target_n = cfg.initial_points.max(1);
    loop {
        for (s, shift) in sums.iter_mut().zip(&shifts) {
            for k in done..target_n {
                lattice.point(k + 1, shift, &mut w);
                *s += f.eval(&w, 1.0, &mut y);
            }
        }
        done = target_n;
        let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
        let mean = means.iter().sum::<f64>() / m as f64;
        let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ((m - 1) as f64);
        let se = (var / m as f64).sqrt();
        let converged = se <= cfg.target_se;
        if converged || done >= cfg.max_points {
            return Ok(MvnCdfEstimate {
                value: mean.clamp(0.0, 1.0),
                std_error: se,
                samples: done * m,
                seed,
                converged,
            });
        }
        target_n = (2 * done).min(cfg.max_points);
    }
}
