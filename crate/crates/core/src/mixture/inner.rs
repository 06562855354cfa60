//! Gaussian orthant probabilities `Φ_k(s b; Σ)` as functions of a scale `s`,
//! prepared once and evaluated at many radial nodes.

use crate::error::{Error, Result};
use crate::gaussian::bvn::bvn_cdf;
use crate::gaussian::matrix::select;
use crate::gaussian::mvn::{GenzIntegrand, Lattice};
use crate::gaussian::normal::{norm_cdf, norm_pdf};
use crate::quadrature::{integrate, QuadratureConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub(crate) enum InnerCdf {
    Zero,
    One,
    Uni { h: f64 },
    Bi { h: [f64; 2], rho: f64 },
    Tri { h: [f64; 3], r: [f64; 3] },
    Genz { f: GenzIntegrand, points: Vec<f64>, q: usize },
}

/// Quasi-random points per evaluation for dimensions above three.
pub(crate) const API_GENZ_POINTS: usize = 4096;

impl InnerCdf {
    /// `b` may hold `±inf`; `cov` is any covariance matrix.
    pub(crate) fn new(b: &[f64], cov: &DMatrix<f64>, genz_points: usize, seed: u64) -> Result<Self> {
        if b.iter().any(|&v| v == f64::NEG_INFINITY) {
            return Ok(InnerCdf::Zero);
        }
        if b.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("NaN Gaussian bound".into()));
        }
        let keep: Vec<usize> = (0..b.len()).filter(|&i| b[i].is_finite()).collect();
        let sd: Vec<f64> = keep.iter().map(|&i| cov[(i, i)].sqrt()).collect();
        if sd.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::SingularMatrix("degenerate conditional variance".into()));
        }
        let h: Vec<f64> = keep.iter().zip(&sd).map(|(&i, s)| b[i] / s).collect();
        let corr = |a: usize, c: usize| cov[(keep[a], keep[c])] / (sd[a] * sd[c]);
        Ok(match keep.len() {
            0 => InnerCdf::One,
            1 => InnerCdf::Uni { h: h[0] },
            2 => InnerCdf::Bi { h: [h[0], h[1]], rho: corr(0, 1).clamp(-1.0, 1.0) },
            3 => InnerCdf::Tri { h: [h[0], h[1], h[2]], r: [corr(0, 1), corr(0, 2), corr(1, 2)] },
            _ => {
                let sub = select(cov, &keep, &keep);
                let bb: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
                let f = GenzIntegrand::new(&bb, &sub)?;
                let q = f.qmc_dim();
                let lattice = Lattice::new(q);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let shifts = 4usize;
                let per = (genz_points / shifts).max(1);
                let mut points = Vec::with_capacity(shifts * per * q);
                let mut w = vec![0.0; q];
                for _ in 0..shifts {
                    let shift: Vec<f64> = (0..q).map(|_| rng.gen()).collect();
                    for k in 1..=per {
                        lattice.point(k, &shift, &mut w);
                        points.extend_from_slice(&w);
                    }
                }
                InnerCdf::Genz { f, points, q }
            }
        })
    }

    /// `Φ_k(s b; Σ)`.
    pub(crate) fn eval(&self, s: f64) -> f64 {
        match self {
            InnerCdf::Zero => 0.0,
            InnerCdf::One => 1.0,
            InnerCdf::Uni { h } => norm_cdf(s * h),
            InnerCdf::Bi { h, rho } => bvn_cdf(s * h[0], s * h[1], *rho),
            InnerCdf::Tri { h, r } => trivariate_cdf([s * h[0], s * h[1], s * h[2]], *r),
            InnerCdf::Genz { f, points, q } => {
                let mut y = vec![0.0; f.dim()];
                let n = points.len() / (*q).max(1);
                let mut acc = 0.0;
                for i in 0..n {
                    acc += f.eval(&points[i * q..(i + 1) * q], s, &mut y);
                }
                acc / n as f64
            }
        }
    }
}

/// Trivariate standard normal CDF with correlations `(r12, r13, r23)`,
/// by integrating the bivariate conditional law over the first coordinate.
pub(crate) fn trivariate_cdf(h: [f64; 3], r: [f64; 3]) -> f64 {
    // condition on the coordinate whose correlations with the others are weakest
    let perms = [(0usize, 1usize, 2usize), (1, 0, 2), (2, 0, 1)];
    let corr = |a: usize, b: usize| -> f64 {
        match (a.min(b), a.max(b)) {
            (0, 1) => r[0],
            (0, 2) => r[1],
            _ => r[2],
        }
    };
    let (c, a, b) = *perms
        .iter()
        .min_by(|p, q| {
            let sp = corr(p.0, p.1).abs().max(corr(p.0, p.2).abs());
            let sq = corr(q.0, q.1).abs().max(corr(q.0, q.2).abs());
            sp.total_cmp(&sq)
        })
        .unwrap();
    let (rca, rcb, rab) = (corr(c, a), corr(c, b), corr(a, b));
    let sa = (1.0 - rca * rca).max(0.0).sqrt();
    let sb = (1.0 - rcb * rcb).max(0.0).sqrt();
    if sa < 1e-12 || sb < 1e-12 {
        // a conditioning pair is degenerate: fall back to the pair with the crude bound
        return bvn_cdf(h[a].min(h[c]), h[b], rab).min(bvn_cdf(h[a], h[b].min(h[c]), rab));
    }
    let rho = ((rab - rca * rcb) / (sa * sb)).clamp(-1.0, 1.0);
    let hc = h[c];
    if hc == f64::NEG_INFINITY {
        return 0.0;
    }
    let upper = hc.min(40.0);
    let lower = -40.0f64.max(-40.0);
    if upper <= lower {
        return 0.0;
    }
    let cfg = QuadratureConfig { rel_tol: 1e-10, abs_tol: 1e-300, max_subdivisions: 300 };
    let brk: Vec<f64> = [-8.0, -4.0, -2.0, 0.0, 2.0, 4.0].into_iter().filter(|&x| x < upper).collect();
    integrate(
        |z| {
            let p = norm_pdf(z);
            if p == 0.0 {
                return 0.0;
            }
            p * bvn_cdf((h[a] - rca * z) / sa, (h[b] - rcb * z) / sb, rho)
        },
        lower,
        upper,
        &brk,
        &cfg,
    )
    .value
}
