//! Adaptive one-dimensional quadrature.
//!
//! Intervals are refined by bisection; the error of a panel is the difference
//! between the Gauss–Legendre value on the panel and the sum over its halves.
//! Radial mixture integrals are written over the probability scale of the
//! scale variable, split at `1/2` so that both tails are integrated in a
//! coordinate measured from the nearer endpoint (no cancellation in `1 - t`).

use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Tolerances for the adaptive bisection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-15,
            max_subdivisions: 400,
        }
    }
}

impl QuadratureConfig {
    /// Looser setting used inside likelihood evaluations.
    pub fn likelihood() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-300,
            max_subdivisions: 200,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pnm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }
}

const PANEL_ORDER: usize = 10;

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

pub(crate) fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=40).map(GaussLegendre::new).collect());
    &rules[n - 1]
}

struct Panel {
    a: f64,
    b: f64,
    tag: u8,
    left: f64,
    right: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integration over tagged segments `(a, b, tag)`; `f(x, tag)`.
pub fn adaptive_tagged<F>(mut f: F, segments: &[(f64, f64, u8)], cfg: &QuadratureConfig) -> QuadResult
where
    F: FnMut(f64, u8) -> f64,
{
    let rule = panel_rule();
    let mut evaluations = 0usize;
    let mut heap = BinaryHeap::with_capacity(segments.len() * 4);

    let mut make = |a: f64, b: f64, tag: u8, whole: Option<f64>, evals: &mut usize| -> Panel {
        let mut g = |x: f64| f(x, tag);
        let m = 0.5 * (a + b);
        let whole = match whole {
            Some(w) => w,
            None => {
                *evals += PANEL_ORDER;
                rule.integrate(&mut g, a, b)
            }
        };
        let left = rule.integrate(&mut g, a, m);
        let right = rule.integrate(&mut g, m, b);
        *evals += 2 * PANEL_ORDER;
        let err = (whole - left - right).abs();
        Panel { a, b, tag, left, right, err: if err.is_nan() { f64::INFINITY } else { err } }
    };

    for &(a, b, tag) in segments {
        if b > a {
            heap.push(make(a, b, tag, None, &mut evaluations));
        }
    }

    let mut subdivisions = 0usize;
    loop {
        let (total, err) = heap
            .iter()
            .fold((0.0, 0.0), |(s, e), p| (s + p.left + p.right, e + p.err));
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= target || subdivisions >= cfg.max_subdivisions {
            return QuadResult {
                value: total,
                abs_error: err,
                evaluations,
                converged: err <= target,
            };
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => {
                return QuadResult { value: 0.0, abs_error: 0.0, evaluations, converged: true };
            }
        };
        // panels that cannot be split further in floating point are kept as is
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            let mut frozen = worst;
            frozen.err = 0.0;
            heap.push(frozen);
            subdivisions += 1;
            continue;
        }
        heap.push(make(worst.a, m, worst.tag, Some(worst.left), &mut evaluations));
        heap.push(make(m, worst.b, worst.tag, Some(worst.right), &mut evaluations));
        subdivisions += 1;
    }
}

/// Adaptive integration on a finite interval with optional interior breakpoints.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    interior: &[f64],
    cfg: &QuadratureConfig,
) -> QuadResult {
    let mut pts = vec![a];
    pts.extend(interior.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let segs: Vec<_> = pts.windows(2).map(|w| (w[0], w[1], 0u8)).collect();
    adaptive_tagged(|x, _| f(x), &segs, cfg)
}

/// Adaptive integration on `[a, ∞)`; `scale` sets where the geometric panels
/// start and the tail is mapped through `x = L / s`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    cfg: &QuadratureConfig,
) -> QuadResult {
    let mut segs = Vec::new();
    let mut lo = a;
    let mut width = 0.25 * scale;
    for _ in 0..8 {
        segs.push((lo, lo + width, 0u8));
        lo += width;
        width *= 2.0;
    }
    let tail_start = lo;
    segs.push((0.0, 1.0, 1u8));
    adaptive_tagged(
        |x, tag| {
            if tag == 0 {
                f(x)
            } else {
                if x <= 0.0 {
                    return 0.0;
                }
                let y = tail_start / x;
                let v = f(y);
                if v == 0.0 {
                    0.0
                } else {
                    v * tail_start / (x * x)
                }
            }
        },
        &segs,
        cfg,
    )
}

/// Which end of the unit interval a probability coordinate is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbSide {
    /// `p` is the lower-tail probability `t`.
    Lower,
    /// `p` is the upper-tail probability `1 - t`.
    Upper,
}

const UNIT_BREAKS: [f64; 10] = [0.0, 1e-14, 1e-10, 1e-7, 1e-5, 1e-3, 1e-2, 0.06, 0.2, 0.5];

/// Integrates `h` over `t ∈ (0, 1)`, calling `h(p, side)` with `p` measured
/// from the nearer endpoint.
pub fn integrate_unit<F: FnMut(f64, ProbSide) -> f64>(mut h: F, cfg: &QuadratureConfig) -> QuadResult {
    let mut segs = Vec::with_capacity(2 * UNIT_BREAKS.len());
    for w in UNIT_BREAKS.windows(2) {
        segs.push((w[0], w[1], 0u8));
        segs.push((w[0], w[1], 1u8));
    }
    adaptive_tagged(
        |p, tag| h(p, if tag == 0 { ProbSide::Lower } else { ProbSide::Upper }),
        &segs,
        cfg,
    )
}
