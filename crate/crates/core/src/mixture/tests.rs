use super::*;
use crate::special::{ln_gamma, student_t_cdf};
use proptest::prelude::*;
use std::f64::consts::PI;

fn student(df: f64, rho: f64) -> MixtureModel {
    MixtureModel::bivariate(RadialLaw::Student { df }, rho).unwrap()
}

/// Multivariate-t density with unit-diagonal `sigma`.
fn mvt_pdf(x: &[f64], sigma: &DMatrix<f64>, df: f64) -> f64 {
    let d = x.len() as f64;
    let dens = MvnDensity::new(sigma).unwrap();
    let q = dens.quad_form(x);
    (ln_gamma(0.5 * (df + d)) - ln_gamma(0.5 * df) - 0.5 * d * (df * PI).ln() - 0.5 * dens.log_det()
        - 0.5 * (df + d) * (q / df).ln_1p())
    .exp()
}

/// Dunnett–Sobel bivariate t CDF for integer degrees of freedom.
pub(crate) fn bvt_cdf(nu: u32, dh: f64, dk: f64, r: f64) -> f64 {
    let n = nu as f64;
    let tpi = 2.0 * PI;
    let snu = n.sqrt();
    let ors = 1.0 - r * r;
    let hrk = dh - r * dk;
    let krh = dk - r * dh;
    let (xnhk, xnkh) = if hrk.abs() + ors > 0.0 {
        (hrk * hrk / (hrk * hrk + ors * (n + dk * dk)), krh * krh / (krh * krh + ors * (n + dh * dh)))
    } else {
        (0.0, 0.0)
    };
    let hs = (dh - r * dk).signum();
    let ks = (dk - r * dh).signum();
    let mut bvt;
    if nu % 2 == 0 {
        bvt = ors.sqrt().atan2(-r) / tpi;
        let mut gmph = dh / (16.0 * (n + dh * dh)).sqrt();
        let mut gmpk = dk / (16.0 * (n + dk * dk)).sqrt();
        let mut btnckh = 2.0 * xnkh.sqrt().atan2((1.0 - xnkh).sqrt()) / PI;
        let mut btpdkh = 2.0 * (xnkh * (1.0 - xnkh)).sqrt() / PI;
        let mut btnchk = 2.0 * xnhk.sqrt().atan2((1.0 - xnhk).sqrt()) / PI;
        let mut btpdhk = 2.0 * (xnhk * (1.0 - xnhk)).sqrt() / PI;
        for j in 1..=nu / 2 {
            let j = j as f64;
            bvt += gmph * (1.0 + ks * btnckh);
            bvt += gmpk * (1.0 + hs * btnchk);
            btnckh += btpdkh;
            btpdkh = 2.0 * j * btpdkh * (1.0 - xnkh) / (2.0 * j + 1.0);
            btnchk += btpdhk;
            btpdhk = 2.0 * j * btpdhk * (1.0 - xnhk) / (2.0 * j + 1.0);
            gmph = gmph * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dh * dh / n));
            gmpk = gmpk * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dk * dk / n));
        }
    } else {
        let qhrk = (dh * dh + dk * dk - 2.0 * r * dh * dk + n * ors).sqrt();
        let hkrn = dh * dk + r * n;
        let hkn = dh * dk - n;
        let hpk = dh + dk;
        bvt = (-snu * (hkn * qhrk + hpk * hkrn)).atan2(hkn * hkrn - n * hpk * qhrk) / tpi;
        if bvt < -1e-15 {
            bvt += 1.0;
        }
        let mut gmph = dh / (tpi * snu * (1.0 + dh * dh / n));
        let mut gmpk = dk / (tpi * snu * (1.0 + dk * dk / n));
        let mut btnckh = xnkh.sqrt();
        let mut btpdkh = btnckh;
        let mut btnchk = xnhk.sqrt();
        let mut btpdhk = btnchk;
        for j in 1..=(nu - 1) / 2 {
            let j = j as f64;
            bvt += gmph * (1.0 + ks * btnckh);
            bvt += gmpk * (1.0 + hs * btnchk);
            btpdkh = (2.0 * j - 1.0) * btpdkh * (1.0 - xnkh) / (2.0 * j);
            btnckh += btpdkh;
            btpdhk = (2.0 * j - 1.0) * btpdhk * (1.0 - xnhk) / (2.0 * j);
            btnchk += btpdhk;
            gmph = 2.0 * j * gmph / ((2.0 * j + 1.0) * (1.0 + dh * dh / n));
            gmpk = 2.0 * j * gmpk / ((2.0 * j + 1.0) * (1.0 + dk * dk / n));
        }
    }
    bvt
}

fn t_quantile(p: f64, df: f64) -> f64 {
    brent(|x| student_t_cdf(x, df) - p, -1e6, 1e6, 1e-14, 500).unwrap()
}

#[test]
fn bvt_oracle_reduces_to_product_for_independence_at_large_df() {
    // sanity of the oracle itself: exact orthant and near-Gaussian limit
    for nu in [1u32, 2, 3, 10] {
        let v = bvt_cdf(nu, 0.0, 0.0, 0.5);
        assert!((v - (0.25 + f64::asin(0.5) / (2.0 * PI))).abs() < 1e-14, "nu={nu}");
    }
    let nu = 2u32;
    // one coordinate at +∞ is not representable; use a very large bound
    let v = bvt_cdf(nu, 1.3, 1e5, 0.3);
    assert!((v - student_t_cdf(1.3, 2.0)).abs() < 1e-9);
}

#[test]
fn gaussian_examples() {
    let m = MixtureModel::bivariate(RadialLaw::Dirac { r0: 1.0 }, 0.0).unwrap();
    assert!((m.joint_cdf(&[0.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
    let m1 = MixtureModel::from_correlation_matrix(RadialLaw::Dirac { r0: 1.0 }, DMatrix::identity(1, 1)).unwrap();
    assert!((m1.joint_pdf(&[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
    let c = m.copula_cdf(&[0.3, 0.3]).unwrap();
    assert!((c - 0.09).abs() < 1e-9);
}

#[test]
fn cauchy_margin_examples() {
    let m = MixtureModel::from_correlation_matrix(RadialLaw::Student { df: 1.0 }, DMatrix::identity(1, 1)).unwrap();
    assert!((m.joint_pdf(&[1.0]).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-10);
    assert!((m.marginal_cdf(0, 1.0).unwrap() - 0.75).abs() < 1e-10);
    assert_eq!(m.marginal_cdf(0, 0.0).unwrap(), 0.5);
}

#[test]
fn normalisation_at_infinity() {
    for law in [RadialLaw::Student { df: 3.0 }, RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 }, RadialLaw::Rayleigh] {
        let m = MixtureModel::bivariate(law, 0.4).unwrap();
        let v = m.joint_cdf(&[f64::INFINITY, f64::INFINITY]).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
        // one coordinate at +∞ leaves the margin
        let v = m.joint_cdf(&[0.7, f64::INFINITY]).unwrap();
        assert!((v - m.marginal_cdf(0, 0.7).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn student_bivariate_cdf_matches_oracle() {
    for nu in [1u32, 3, 10] {
        for rho in [0.0, 0.5] {
            let m = student(nu as f64, rho);
            for x in [[1.0, 1.0], [-0.5, 2.0], [-3.0, -1.2]] {
                let v = m.joint_cdf(&x).unwrap();
                let e = bvt_cdf(nu, x[0], x[1], rho);
                assert!((v - e).abs() < 1e-8, "nu={nu} rho={rho} x={x:?}: {v} vs {e}");
            }
        }
    }
}

#[test]
fn student_density_matches_oracle() {
    for df in [1.0, 3.0, 10.0] {
        for rho in [0.0, 0.5] {
            let sigma = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { rho });
            let m = MixtureModel::from_correlation_matrix(RadialLaw::Student { df }, sigma.clone()).unwrap();
            for x in [[0.1, -0.4, 0.9], [2.5, 3.0, 1.0]] {
                let v = m.joint_pdf(&x).unwrap();
                let e = mvt_pdf(&x, &sigma, df);
                assert!(((v - e) / e).abs() < 1e-8, "df={df} rho={rho}: {v} vs {e}");
            }
        }
    }
}

#[test]
fn student_copula_matches_oracle() {
    let m = student(3.0, 0.5);
    let q = t_quantile(0.9, 3.0);
    let e = bvt_cdf(3, q, q, 0.5);
    let v = m.copula_cdf(&[0.9, 0.9]).unwrap();
    assert!((v - e).abs() < 1e-8, "{v} vs {e}");
}

#[test]
fn elliptical_orthant_is_law_free() {
    let sigma = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.5 });
    let e = 0.125 + 3.0 * f64::asin(0.5) / (4.0 * PI);
    for law in [RadialLaw::Student { df: 1.0 }, RadialLaw::BoxCox { beta: -0.5 }, RadialLaw::Gpd { xi: 0.3 }] {
        let m = MixtureModel::from_correlation_matrix(law, sigma.clone()).unwrap();
        assert!((m.joint_cdf(&[0.0; 3]).unwrap() - e).abs() < 1e-9, "{law:?}");
    }
}

#[test]
fn marginal_quantile_inverts_cdf() {
    for law in [RadialLaw::Student { df: 1.0 }, RadialLaw::ExtWeibull { beta: 0.5, gamma: 2.0 }, RadialLaw::BoxCox { beta: 2.0 }] {
        let m = MixtureModel::bivariate(law, 0.0).unwrap();
        for &x in &[-20.0, -2.0, -0.1, 0.4, 3.0, 50.0] {
            // upper half through the survival function to keep precision
            let back = if x > 0.0 {
                m.marginal_quantile_upper(0, m.marginal_sf(0, x).unwrap()).unwrap()
            } else {
                m.marginal_quantile(0, m.marginal_cdf(0, x).unwrap()).unwrap()
            };
            let p = m.marginal_cdf(0, x).unwrap();
            assert!((back - x).abs() < 1e-8 * (1.0 + x.abs()), "{law:?}: {x} -> {p} -> {back}");
        }
        let q = 1e-12;
        let x = m.marginal_quantile_upper(0, q).unwrap();
        assert!((m.marginal_sf(0, x).unwrap() / q - 1.0).abs() < 1e-8);
    }
}

#[test]
fn partial_reductions() {
    let m = MixtureModel::bivariate(RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 }, 0.3).unwrap();
    let x = [0.4, -0.8];
    assert!((m.partial_cdf(&x, &[0, 1]).unwrap() - m.joint_pdf(&x).unwrap()).abs() < 1e-14);
    let m1 = MixtureModel::from_correlation_matrix(RadialLaw::Rayleigh, DMatrix::identity(1, 1)).unwrap();
    assert!((m1.partial_cdf(&[0.9], &[0]).unwrap() - m1.marginal_pdf(0, 0.9).unwrap()).abs() < 1e-10);
}

#[test]
fn partial_matches_finite_difference() {
    let m = MixtureModel::bivariate(RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 }, 0.6).unwrap();
    let h = 1e-4;
    for x in [[0.3, 0.8], [-1.0, 2.0], [2.5, 1.5]] {
        let fd = (m.joint_cdf(&[x[0] + h, x[1]]).unwrap() - m.joint_cdf(&[x[0] - h, x[1]]).unwrap()) / (2.0 * h);
        let v = m.partial_cdf(&x, &[0]).unwrap();
        assert!((fd - v).abs() < 1e-4, "{x:?}: {fd} vs {v}");
        // mixed second difference against the density
        let c = |a: f64, b: f64| m.joint_cdf(&[a, b]).unwrap();
        let hh = 1e-3;
        let fd2 = (c(x[0] + hh, x[1] + hh) - c(x[0] + hh, x[1] - hh) - c(x[0] - hh, x[1] + hh)
            + c(x[0] - hh, x[1] - hh))
            / (4.0 * hh * hh);
        let g = m.joint_pdf(&x).unwrap();
        assert!((fd2 - g).abs() < 1e-4, "{x:?}: {fd2} vs {g}");
    }
}

#[test]
fn trivariate_partial_matches_finite_difference() {
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0]);
    let m = MixtureModel::from_correlation_matrix(RadialLaw::Student { df: 4.0 }, sigma).unwrap();
    let x = [0.2, 0.9, -0.3];
    let h = 1e-3;
    let c = |a: f64, b: f64| m.joint_cdf(&[a, b, x[2]]).unwrap();
    let fd = (c(x[0] + h, x[1] + h) - c(x[0] + h, x[1] - h) - c(x[0] - h, x[1] + h) + c(x[0] - h, x[1] - h))
        / (4.0 * h * h);
    let v = m.partial_cdf(&x, &[0, 1]).unwrap();
    assert!((fd - v).abs() < 1e-4, "{fd} vs {v}");
}

#[test]
fn copula_margin_consistency() {
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0]);
    let m = MixtureModel::from_correlation_matrix(RadialLaw::BoxCox { beta: 1.5 }, sigma).unwrap();
    let full = m.copula_cdf(&[0.7, 1.0, 0.4]).unwrap();
    let sub = m.subset(&[0, 2]).unwrap().copula_cdf(&[0.7, 0.4]).unwrap();
    assert!((full - sub).abs() < 1e-9);
}

#[test]
fn copula_is_scale_invariant() {
    for law in [RadialLaw::Student { df: 2.0 }, RadialLaw::ExtWeibull { beta: 1.0, gamma: 1.0 }] {
        let m = MixtureModel::bivariate(law, 0.5).unwrap();
        let m3 = m.clone().with_radial_scale(3.0).unwrap();
        for u in [[0.2, 0.9], [0.95, 0.97]] {
            let a = m.copula_cdf(&u).unwrap();
            let b = m3.copula_cdf(&u).unwrap();
            assert!((a - b).abs() < 1e-9, "{law:?} {u:?}: {a} vs {b}");
            let a = m.copula_pdf(&u).unwrap();
            let b = m3.copula_pdf(&u).unwrap();
            assert!((a / b - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn joint_density_is_positive() {
    let m = MixtureModel::bivariate(RadialLaw::Gpd { xi: -0.5 }, 0.9).unwrap();
    assert!(m.joint_pdf(&[8.0, -8.0]).unwrap() > 0.0);
}

#[test]
fn spatial_model_uses_site_correlation() {
    let sites = SiteSet::from_coords(vec![[0.0, 0.0], [0.5, 0.0]]).unwrap();
    let corr = CorrelationModel::isotropic(1.0, 1.0).unwrap();
    let m = MixtureModel::new(RadialLaw::Rayleigh, corr, sites).unwrap();
    assert!((m.sigma()[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rectangles_have_nonnegative_mass(a in -3.0f64..3.0, b in -3.0f64..3.0, da in 0.01f64..2.0, db in 0.01f64..2.0, rho in -0.8f64..0.9) {
        let m = MixtureModel::bivariate(RadialLaw::ExtWeibull { beta: 0.7, gamma: 1.3 }, rho).unwrap();
        let c = |x: f64, y: f64| m.joint_cdf(&[x, y]).unwrap();
        let mass = c(a + da, b + db) - c(a, b + db) - c(a + da, b) + c(a, b);
        prop_assert!(mass >= -1e-7, "mass {mass}");
    }

    #[test]
    fn joint_cdf_is_monotone(x in -3.0f64..3.0, y in -3.0f64..3.0, dx in 0.0f64..1.0, rho in -0.8f64..0.9) {
        let m = MixtureModel::bivariate(RadialLaw::Student { df: 3.0 }, rho).unwrap();
        prop_assert!(m.joint_cdf(&[x + dx, y]).unwrap() >= m.joint_cdf(&[x, y]).unwrap() - 1e-8);
    }
}
