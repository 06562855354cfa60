//! Dense covariance blocks, Gaussian densities and conditional laws.

use super::normal::LN_SQRT_2PI;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Submatrix `m[rows, cols]`.
pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Indices of `0..d` not in `idx`.
pub fn complement(d: usize, idx: &[usize]) -> Vec<usize> {
    (0..d).filter(|i| !idx.contains(i)).collect()
}

/// Lower Cholesky factor, or a singular-matrix error.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::SingularMatrix(format!("{}x{} block is not positive definite", m.nrows(), m.ncols())))
}

/// A factorised Gaussian density `N(0, Σ)`.
#[derive(Debug, Clone)]
pub struct MvnDensity {
    chol: DMatrix<f64>,
    ln_norm: f64,
}

impl MvnDensity {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let chol = cholesky_lower(sigma)?;
        let d = sigma.nrows() as f64;
        let log_det: f64 = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { chol, ln_norm: -d * LN_SQRT_2PI - 0.5 * log_det })
    }

    pub fn dim(&self) -> usize {
        self.chol.nrows()
    }

    pub fn log_det(&self) -> f64 {
        -2.0 * (self.ln_norm + self.dim() as f64 * LN_SQRT_2PI)
    }

    /// `xᵀ Σ⁻¹ x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut z = [0.0f64; 64];
        let mut heap;
        let z: &mut [f64] = if n <= 64 {
            &mut z[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        let mut q = 0.0;
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.chol[(i, j)] * z[j];
            }
            z[i] = s / self.chol[(i, i)];
            q += z[i] * z[i];
        }
        q
    }

    /// Log density at `x`; [`Self::ln_pdf_from_quad`] takes a precomputed quadratic form.
    #[inline]
    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        self.ln_norm - 0.5 * self.quad_form(x)
    }

    #[inline]
    pub fn ln_pdf_from_quad(&self, q: f64) -> f64 {
        self.ln_norm - 0.5 * q
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }
}

/// Standard Gaussian density `φ_D(x; Σ)`.
pub fn mvn_pdf(x: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    check_dims(x.len(), sigma)?;
    Ok(MvnDensity::new(sigma)?.ln_pdf(x).exp())
}

pub fn ln_mvn_pdf(x: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    check_dims(x.len(), sigma)?;
    Ok(MvnDensity::new(sigma)?.ln_pdf(x))
}

fn check_dims(n: usize, sigma: &DMatrix<f64>) -> Result<()> {
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "point of length {n} against a {}x{} matrix",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(())
}

/// Partition of Σ into a free block `A` and a conditioning block `B`.
#[derive(Debug, Clone)]
pub struct CovarianceBlocks {
    pub sigma: DMatrix<f64>,
    pub free: Vec<usize>,
    pub given: Vec<usize>,
    pub sigma_ff: DMatrix<f64>,
    pub sigma_fg: DMatrix<f64>,
    pub sigma_gg: DMatrix<f64>,
    /// `Σ_{A;B} Σ_{B;B}⁻¹`.
    pub regression: DMatrix<f64>,
    /// `Σ_{A|B}`.
    pub schur: DMatrix<f64>,
}

impl CovarianceBlocks {
    pub fn new(sigma: &DMatrix<f64>, given: &[usize]) -> Result<Self> {
        let d = sigma.nrows();
        if given.iter().any(|&i| i >= d) {
            return Err(Error::InvalidParameter("conditioning index out of range".into()));
        }
        let free = complement(d, given);
        let sigma_ff = select(sigma, &free, &free);
        let sigma_fg = select(sigma, &free, given);
        let sigma_gg = select(sigma, given, given);
        let (regression, schur) = if given.is_empty() {
            (DMatrix::zeros(free.len(), 0), sigma_ff.clone())
        } else {
            let chol = sigma_gg
                .clone()
                .cholesky()
                .ok_or_else(|| Error::SingularMatrix("conditioning block is not positive definite".into()))?;
            // Σ_fg Σ_gg⁻¹ = (Σ_gg⁻¹ Σ_gf)ᵀ
            let reg = chol.solve(&sigma_fg.transpose()).transpose();
            let mut schur = &sigma_ff - &reg * sigma_fg.transpose();
            schur = 0.5 * (&schur + schur.transpose());
            (reg, schur)
        };
        Ok(Self {
            sigma: sigma.clone(),
            free,
            given: given.to_vec(),
            sigma_ff,
            sigma_fg,
            sigma_gg,
            regression,
            schur,
        })
    }

    pub fn conditional_mean(&self, x_given: &[f64]) -> DVector<f64> {
        if self.given.is_empty() {
            return DVector::zeros(self.free.len());
        }
        &self.regression * DVector::from_column_slice(x_given)
    }
}

/// Gaussian law of `X_A | X_B = x_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConditional {
    pub free: Vec<usize>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Law of the complement of `given`, conditional on `X_given = x_given`.
pub fn conditional_gaussian(sigma: &DMatrix<f64>, given: &[usize], x_given: &[f64]) -> Result<GaussianConditional> {
    if given.len() != x_given.len() {
        return Err(Error::InvalidParameter("conditioning values do not match the index set".into()));
    }
    let b = CovarianceBlocks::new(sigma, given)?;
    Ok(GaussianConditional {
        mean: b.conditional_mean(x_given),
        cov: b.schur.clone(),
        free: b.free,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn density_examples() {
        let one = DMatrix::from_element(1, 1, 1.0);
        assert!((mvn_pdf(&[0.0], &one).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        let id = DMatrix::<f64>::identity(2, 2);
        assert!((mvn_pdf(&[0.0, 0.0], &id).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        // ρ = 1/2 at (1, 1): quadratic form 2(1 - ρ)/(1 - ρ²) = 4/3, det 3/4
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let expect = (-(4.0 / 3.0) / 2.0f64).exp() / (2.0 * PI * 0.75f64.sqrt());
        assert!((mvn_pdf(&[1.0, 1.0], &s).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn conditional_examples() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let c = conditional_gaussian(&s, &[0], &[2.0]).unwrap();
        assert!((c.mean[0] - 1.0).abs() < 1e-15);
        assert!((c.cov[(0, 0)] - 0.75).abs() < 1e-15);

        let id = DMatrix::<f64>::identity(3, 3);
        let c = conditional_gaussian(&id, &[1], &[1.7]).unwrap();
        assert_eq!(c.mean.as_slice(), &[0.0, 0.0]);
        assert_eq!(c.cov, DMatrix::<f64>::identity(2, 2));

        let c = conditional_gaussian(&s, &[0, 1], &[0.3, 0.1]).unwrap();
        assert!(c.free.is_empty() && c.mean.is_empty() && c.cov.is_empty());
    }

    #[test]
    fn singular_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(mvn_pdf(&[0.0, 0.0], &s).is_err());
    }

    fn random_corr(d: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(d, d + 2, |_, _| rng.gen::<f64>() - 0.5);
        let c = &a * a.transpose() + DMatrix::<f64>::identity(d, d) * 0.05;
        let s = DVector::from_fn(d, |i, _| 1.0 / c[(i, i)].sqrt());
        DMatrix::from_fn(d, d, |i, j| c[(i, j)] * s[i] * s[j])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn marginal_times_conditional_is_joint(seed in 0u64..100_000, d in 2usize..=6, k in 1usize..6,
                                              xs in proptest::collection::vec(-2.5f64..2.5, 6)) {
            let k = k.min(d - 1);
            let sigma = random_corr(d, seed);
            let given: Vec<usize> = (0..k).collect();
            let x = &xs[..d];
            let c = conditional_gaussian(&sigma, &given, &x[..k]).unwrap();
            let marg = ln_mvn_pdf(&x[..k], &select(&sigma, &given, &given)).unwrap();
            let resid: Vec<f64> = c.free.iter().enumerate().map(|(j, &i)| x[i] - c.mean[j]).collect();
            let cond = ln_mvn_pdf(&resid, &c.cov).unwrap();
            let joint = ln_mvn_pdf(x, &sigma).unwrap();
            prop_assert!(((marg + cond).exp() / joint.exp() - 1.0).abs() < 1e-10);
        }
    }
}
