use super::*;
use crate::gaussian::sites::{CorrelationModel, SiteSet};
use crate::mixture::rule::{RadialRule, RuleConfig};
use crate::special::gamma_p;
use nalgebra::DMatrix;

/// 99% Kolmogorov–Smirnov critical value for `n` draws.
fn ks_band(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

fn ks_distance<F: Fn(f64) -> f64>(mut x: Vec<f64>, cdf: F) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn corr3() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.3, 0.6, 1.0, 0.5, 0.3, 0.5, 1.0])
}

fn laws() -> Vec<RadialLaw> {
    vec![
        RadialLaw::Student { df: 3.0 },
        RadialLaw::Rayleigh,
        RadialLaw::ParetoSlash { gamma: 2.0 },
        RadialLaw::Gpd { xi: 0.3 },
        RadialLaw::Gpd { xi: -0.3 },
        RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 },
        RadialLaw::BoxCox { beta: 0.5 },
    ]
}

#[test]
fn dirac_sample_correlation() {
    let sigma = corr3();
    let model = MixtureModel::from_correlation_matrix(RadialLaw::Dirac { r0: 1.0 }, sigma.clone()).unwrap();
    let x = simulate(&model, 100_000, 5).unwrap();
    let n = x.len() as f64;
    for i in 0..3 {
        for j in 0..3 {
            let c: f64 = x.iter().map(|r| r[i] * r[j]).sum::<f64>() / n;
            assert!((c - sigma[(i, j)]).abs() < 0.01, "({i},{j}): {c}");
        }
    }
}

#[test]
fn extweibull_margins_pass_ks() {
    let law = RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 };
    let model = MixtureModel::from_correlation_matrix(law, corr3()).unwrap();
    let rule = RadialRule::new(&law, &RuleConfig::default()).unwrap();
    let x = simulate(&model, 100_000, 6).unwrap();
    for k in 0..3 {
        let col: Vec<f64> = x.iter().map(|r| r[k]).collect();
        let n = col.len();
        let dn = ks_distance(col, |v| rule.marginal_cdf(v));
        assert!(dn < ks_band(n), "site {k}: {dn}");
    }
}

#[test]
fn simulation_is_deterministic() {
    let model = MixtureModel::from_correlation_matrix(RadialLaw::Student { df: 2.0 }, corr3()).unwrap();
    let a = simulate(&model, 1, 42).unwrap();
    let b = simulate(&model, 1, 42).unwrap();
    assert_eq!(a.len(), 1);
    for (u, v) in a[0].iter().zip(&b[0]) {
        assert_eq!(u.to_bits(), v.to_bits());
    }
    assert!(simulate(&model, 0, 1).unwrap().is_empty());
}

#[test]
fn dirac_chain_is_constant() {
    let model = MixtureModel::bivariate(RadialLaw::Dirac { r0: 1.7 }, 0.4).unwrap();
    let c = conditional_scale_sample(&model, &[0], &[0.8], &McmcConfig::default(), 100, 1).unwrap();
    assert!(c.draws.iter().all(|&r| r == 1.7));
}

#[test]
fn student_chain_matches_gamma_posterior() {
    // V = ν / R² ~ Gamma((ν+1)/2, rate (1 + x²/ν)/2) given one observation
    let nu = 4.0;
    let x = 1.3;
    let model = MixtureModel::bivariate(RadialLaw::Student { df: nu }, 0.2).unwrap();
    let n = 20_000;
    let c = conditional_scale_sample(&model, &[0], &[x], &McmcConfig::default(), n, 7).unwrap();
    assert!(c.acceptance > 0.05 && c.acceptance < 0.8, "{}", c.acceptance);
    let rate = 0.5 * (1.0 + x * x / nu);
    let shape = 0.5 * (nu + 1.0);
    // R increasing in 1/V: Pr(R <= r) = Pr(V >= ν/r²)
    let dn = ks_distance(c.draws, |r| 1.0 - gamma_p(shape, rate * nu / (r * r)));
    assert!(dn < ks_band(n), "{dn}");
}

/// CDF of the normalised chain target by quadrature over `[lo, r]`.
fn scale_cdf(model: &MixtureModel, x1: &[f64], grid: &[f64]) -> Vec<f64> {
    use crate::quadrature::{integrate, integrate_half_line, QuadratureConfig};
    let law = ConditionalScaleLaw::new(model, &[0], x1).unwrap();
    let cfg = QuadratureConfig::default().with_rel_tol(1e-10).with_abs_tol(1e-300);
    let lo = model.radial().support().0;
    let f = |r: f64| law.ln_unnormalized(r).exp();
    let total = integrate_half_line(f, lo, 1.0, &cfg).value;
    let mut acc = 0.0;
    let mut prev = lo;
    grid.iter()
        .map(|&r| {
            acc += integrate(f, prev, r, &[], &cfg).value;
            prev = r;
            acc / total
        })
        .collect()
}

#[test]
fn chains_match_quadrature_of_target() {
    let n = 50_000;
    for (k, law) in laws().into_iter().enumerate() {
        let model = MixtureModel::bivariate(law, 0.5).unwrap();
        let x1 = [1.1];
        let c = conditional_scale_sample(&model, &[0], &x1, &McmcConfig::default(), n, 100 + k as u64).unwrap();
        let mut draws = c.draws.clone();
        draws.sort_by(f64::total_cmp);
        // compare on the empirical deciles and percentiles
        let grid: Vec<f64> = (1..100).map(|i| draws[i * n / 100]).collect();
        let f = scale_cdf(&model, &x1, &grid);
        let dn = (1..100).map(|i| (f[i - 1] - (i * n / 100) as f64 / n as f64).abs()).fold(0.0, f64::max);
        assert!(dn < ks_band(n), "{law:?}: {dn} (acceptance {})", c.acceptance);
    }
}

#[test]
fn chain_halves_agree() {
    let model = MixtureModel::bivariate(RadialLaw::ExtWeibull { beta: 0.5, gamma: 1.0 }, 0.5).unwrap();
    let n = 40_000;
    let c = conditional_scale_sample(&model, &[0], &[2.0], &McmcConfig::default(), n, 8).unwrap();
    let (a, b) = c.draws.split_at(n / 2);
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut dn: f64 = 0.0;
    for &v in a.iter().chain(&b) {
        let fa = a.partition_point(|&x| x <= v) as f64 / a.len() as f64;
        let fb = b.partition_point(|&x| x <= v) as f64 / b.len() as f64;
        dn = dn.max((fa - fb).abs());
    }
    let m = (n / 2) as f64;
    assert!(dn < 1.628 * (2.0 / m).sqrt(), "{dn}");
}

#[test]
fn dirac_conditional_moments() {
    let sigma = corr3();
    let model = MixtureModel::from_correlation_matrix(RadialLaw::Dirac { r0: 1.0 }, sigma.clone()).unwrap();
    let x1 = [1.5];
    let n = 100_000;
    let s = simulate_conditional(&model, &[0], &x1, n, &McmcConfig::default(), 3).unwrap();
    let g = crate::gaussian::conditional_gaussian(&sigma, &[0], &x1).unwrap();
    assert_eq!(s.target, vec![1, 2]);
    let nf = n as f64;
    for a in 0..2 {
        let m: f64 = s.rows.iter().map(|r| r[a]).sum::<f64>() / nf;
        let se = (g.cov[(a, a)] / nf).sqrt();
        assert!((m - g.mean[a]).abs() < 3.0 * se, "mean {a}: {m} vs {}", g.mean[a]);
        for b in 0..2 {
            let c: f64 = s.rows.iter().map(|r| (r[a] - g.mean[a]) * (r[b] - g.mean[b])).sum::<f64>() / nf;
            let se = ((g.cov[(a, a)] * g.cov[(b, b)] + g.cov[(a, b)].powi(2)) / nf).sqrt();
            assert!((c - g.cov[(a, b)]).abs() < 3.0 * se, "cov {a}{b}: {c}");
        }
    }
}

#[test]
fn independent_dirac_conditional_is_unconditional() {
    let model = MixtureModel::from_correlation_matrix(RadialLaw::Dirac { r0: 1.0 }, DMatrix::identity(3, 3)).unwrap();
    let s = simulate_conditional(&model, &[1], &[2.5], 20_000, &McmcConfig::default(), 4).unwrap();
    for a in 0..2 {
        let col: Vec<f64> = s.rows.iter().map(|r| r[a]).collect();
        let dn = ks_distance(col, crate::gaussian::normal::norm_cdf);
        assert!(dn < ks_band(20_000), "{dn}");
    }
}

#[test]
fn student_conditional_matches_density_quadrature() {
    let nu = 3.0;
    let model = MixtureModel::bivariate(RadialLaw::Student { df: nu }, 0.6).unwrap();
    let x1 = [1.4];
    let n = 20_000;
    let s = simulate_conditional(&model, &[0], &x1, n, &McmcConfig::default(), 12).unwrap();
    let ec = EllipticalConditional::new(&model, &[0], &x1).unwrap();
    let mut col: Vec<f64> = s.rows.iter().map(|r| r[0]).collect();
    col.sort_by(f64::total_cmp);
    let grid: Vec<f64> = (1..50).map(|i| col[i * n / 50]).collect();
    let f = ec.cdf_on_grid(&grid).unwrap();
    // closed form: a t with ν + 1 degrees of freedom, location ρ x1 and
    // squared scale (1 - ρ²)(ν + x1²)/(ν + 1)
    let sc = ((1.0 - 0.36) * (nu + x1[0] * x1[0]) / (nu + 1.0)).sqrt();
    for (i, &x) in grid.iter().enumerate() {
        let t = crate::special::student_t_cdf((x - 0.6 * x1[0]) / sc, nu + 1.0);
        assert!((f[i] - t).abs() < 1e-6, "{x}: {} vs {t}", f[i]);
        let emp = ((i + 1) * n / 50) as f64 / n as f64;
        assert!((f[i] - emp).abs() < ks_band(n), "{x}: {} vs {emp}", f[i]);
    }
}

#[test]
fn dirac_conditional_density_is_gaussian() {
    let sigma = corr3();
    let model = MixtureModel::from_correlation_matrix(RadialLaw::Dirac { r0: 1.0 }, sigma.clone()).unwrap();
    let g = crate::gaussian::conditional_gaussian(&sigma, &[0], &[0.7]).unwrap();
    for x2 in [[0.0, 0.0], [0.4, -1.0], [2.0, 1.5]] {
        let v = conditional_density(&model, &[0], &[0.7], &x2).unwrap();
        let z = [x2[0] - g.mean[0], x2[1] - g.mean[1]];
        let e = crate::gaussian::mvn_pdf(&z, &g.cov).unwrap();
        assert!((v / e - 1.0).abs() < 1e-10, "{v} vs {e}");
    }
}

#[test]
fn bayes_identity_for_all_laws() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    for law in laws() {
        let model = MixtureModel::bivariate(law, 0.45).unwrap();
        for _ in 0..3 {
            let x1 = rng.gen_range(-2.5..2.5);
            let x2 = rng.gen_range(-2.5..2.5);
            let a = conditional_density(&model, &[0], &[x1], &[x2]).unwrap();
            let b = conditional_density_ratio(&model, &[0], &[x1], &[x2]).unwrap();
            assert!((a - b).abs() < 1e-5 * b.max(1e-3), "{law:?} ({x1}, {x2}): {a} vs {b}");
        }
    }
}

#[test]
fn conditional_density_normalises_and_routes_agree() {
    for law in [RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 }, RadialLaw::Student { df: 2.0 }, RadialLaw::Gpd { xi: -0.2 }] {
        let model = MixtureModel::from_correlation_matrix(law, corr3()).unwrap();
        let ec = EllipticalConditional::new(&model, &[0, 2], &[1.0, -0.4]).unwrap();
        let h = 0.01;
        let total: f64 = (-2000..=2000).map(|i| ec.density(&[i as f64 * h]).unwrap() * h).sum();
        let tail_ok = matches!(law, RadialLaw::Student { .. });
        // the heavy Student tail leaves mass beyond ±20
        assert!((total - 1.0).abs() < if tail_ok { 5e-3 } else { 1e-3 }, "{law:?}: {total}");
        for x in [-1.0, 0.2, 2.5] {
            let a = ec.density(&[x]).unwrap();
            let b = ec.density_pseudo_polar(x).unwrap();
            assert!((a - b).abs() < 1e-4 * a.max(1e-300), "{law:?}: {a} vs {b}");
        }
    }
}

#[test]
fn sphere_areas() {
    assert!((density::sphere_area(1) - 2.0).abs() < 1e-14);
    assert!((density::sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
    assert!((density::sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
}

#[test]
fn quantile_maps() {
    let corr = CorrelationModel::isotropic(1.0, 1.0).unwrap();
    let given = SiteSet::from_coords(vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
    let grid = SiteSet::from_coords(vec![[0.3, 0.2], [0.0, 0.0], [0.8, 0.9]]).unwrap();
    let mut spec = QuantileMapSpec {
        probabilities: vec![0.5],
        n: 4000,
        mcmc: McmcConfig::default(),
        uniform_scale: false,
        seed: 1,
    };
    let m = conditional_quantile_map(RadialLaw::Dirac { r0: 1.0 }, &corr, &given, &[0.0, 0.0], &grid, &spec).unwrap();
    for v in &m.values {
        assert!(v[0].abs() < 0.08, "{v:?}");
    }
    let law = RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 };
    spec.probabilities = vec![0.25, 0.75];
    spec.n = 500;
    let m = conditional_quantile_map(law, &corr, &given, &[2.0, -0.5], &grid, &spec).unwrap();
    for v in &m.values {
        assert!(v[0] <= v[1]);
    }
    assert_eq!(m.values[1], vec![2.0, 2.0]);
    spec.uniform_scale = true;
    let u = conditional_quantile_map(law, &corr, &given, &[2.0, -0.5], &grid, &spec).unwrap();
    for v in u.values.iter().flatten() {
        assert!(*v > 0.0 && *v < 1.0);
    }
    spec.n = 1;
    assert!(conditional_quantile_map(law, &corr, &given, &[2.0, -0.5], &grid, &spec).is_err());
}

#[test]
fn conditional_simulation_is_deterministic() {
    let model = MixtureModel::from_correlation_matrix(RadialLaw::Rayleigh, corr3()).unwrap();
    let a = simulate_conditional(&model, &[2], &[0.5], 50, &McmcConfig::default(), 9).unwrap();
    let b = simulate_conditional(&model, &[2], &[0.5], 50, &McmcConfig::default(), 9).unwrap();
    assert_eq!(a, b);
    assert!(simulate_conditional(&model, &[0, 1, 2], &[0.5, 0.1, 0.0], 5, &McmcConfig::default(), 9).is_err());
}
