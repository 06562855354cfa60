//! Observation matrices and the rank transform.

use crate::error::{Error, Result};
use crate::gaussian::sites::SiteSet;
use serde::{Deserialize, Serialize};

/// `n × D` observations with missing entries, one column per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    d: usize,
    /// Row-major, `NaN` where missing.
    values: Vec<f64>,
    sites: SiteSet,
    time: Vec<i64>,
}

impl Dataset {
    /// `rows[i][k]` is `None` when missing. Time stamps default to `0..n`.
    pub fn new(rows: &[Vec<Option<f64>>], sites: SiteSet, time: Option<Vec<i64>>) -> Result<Self> {
        let d = sites.len();
        let n = rows.len();
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidData(format!("row {i} has {} values for {d} sites", row.len())));
            }
            for (k, v) in row.iter().enumerate() {
                match v {
                    Some(x) if !x.is_finite() => {
                        return Err(Error::InvalidData(format!("row {i}, site {k}: non-finite value")));
                    }
                    Some(x) => values.push(*x),
                    None => values.push(f64::NAN),
                }
            }
        }
        Self::from_parts(n, values, sites, time)
    }

    /// Complete data from a row-major matrix.
    pub fn from_matrix(rows: &[Vec<f64>], sites: SiteSet) -> Result<Self> {
        let rows: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect();
        Self::new(&rows, sites, None)
    }

    fn from_parts(n: usize, values: Vec<f64>, sites: SiteSet, time: Option<Vec<i64>>) -> Result<Self> {
        let d = sites.len();
        let time = time.unwrap_or_else(|| (0..n as i64).collect());
        if time.len() != n {
            return Err(Error::InvalidData(format!("{} time stamps for {n} rows", time.len())));
        }
        if time.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidData("time stamps must be non-decreasing".into()));
        }
        let out = Self { n, d, values, sites, time };
        for k in 0..d {
            let m = out.observed_count(k);
            if m < 2 {
                return Err(Error::InvalidData(format!(
                    "site {} has {m} observed values, at least 2 needed",
                    out.sites.labels()[k]
                )));
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn time(&self) -> &[i64] {
        &self.time
    }

    pub fn get(&self, i: usize, k: usize) -> Option<f64> {
        let v = self.values[i * self.d + k];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub fn is_missing(&self, i: usize, k: usize) -> bool {
        self.values[i * self.d + k].is_nan()
    }

    /// Row `i` with `NaN` for missing entries.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn observed_count(&self, k: usize) -> usize {
        (0..self.n).filter(|&i| !self.is_missing(i, k)).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|v| v.is_nan()).count() as f64 / self.values.len() as f64
    }

    /// Rows in the given order (repeats allowed), keeping time stamps
    /// non-decreasing by renumbering them `0..len`.
    pub fn resample_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        Self::from_parts(rows.len(), values, self.sites.clone(), None)
    }

    /// Same data restricted to some columns.
    pub fn select_sites(&self, idx: &[usize]) -> Result<Self> {
        let sites = self.sites.subset(idx)?;
        let mut values = Vec::with_capacity(self.n * idx.len());
        for i in 0..self.n {
            for &k in idx {
                values.push(self.values[i * self.d + k]);
            }
        }
        Self::from_parts(self.n, values, sites, Some(self.time.clone()))
    }

    /// Applies `f(k, x)` to every observed value.
    pub fn map_values<F: Fn(usize, f64) -> f64>(&self, f: F) -> Result<Self> {
        let mut out = self.clone();
        for (j, v) in out.values.iter_mut().enumerate() {
            if !v.is_nan() {
                *v = f(j % self.d, *v);
            }
        }
        Ok(out)
    }
}

/// Data on the pseudo-uniform scale, same layout and mask as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoUniformData {
    n: usize,
    d: usize,
    values: Vec<f64>,
    sites: SiteSet,
}

impl PseudoUniformData {
    /// Direct construction, e.g. for data already on the uniform scale.
    pub fn new(rows: &[Vec<Option<f64>>], sites: SiteSet) -> Result<Self> {
        let d = sites.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidData(format!("row {i} has {} values for {d} sites", row.len())));
            }
            for v in row {
                match v {
                    Some(u) if !(*u > 0.0 && *u < 1.0) => {
                        return Err(Error::InvalidData(format!("row {i}: value {u} outside (0, 1)")));
                    }
                    Some(u) => values.push(*u),
                    None => values.push(f64::NAN),
                }
            }
        }
        Ok(Self { n: rows.len(), d, values, sites })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn get(&self, i: usize, k: usize) -> Option<f64> {
        let v = self.values[i * self.d + k];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, k: usize) -> Vec<Option<f64>> {
        (0..self.n).map(|i| self.get(i, k)).collect()
    }

    /// Observed pairs for sites `a` and `b`.
    pub fn pairs(&self, a: usize, b: usize) -> Vec<(Option<f64>, Option<f64>)> {
        (0..self.n).map(|i| (self.get(i, a), self.get(i, b))).collect()
    }
}

/// Average ranks of `x` (1-based).
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // positions i..=j share ranks i+1..=j+1
        let r = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// `rank / (m_k + 1)` per column over the observed entries, average ranks for ties.
pub fn rank_transform(data: &Dataset) -> Result<PseudoUniformData> {
    let (n, d) = (data.n(), data.dim());
    let mut values = vec![f64::NAN; n * d];
    for k in 0..d {
        let rows: Vec<usize> = (0..n).filter(|&i| !data.is_missing(i, k)).collect();
        let x: Vec<f64> = rows.iter().map(|&i| data.values[i * d + k]).collect();
        if x.len() < 2 {
            return Err(Error::InvalidData(format!("site {k} has fewer than 2 observed values")));
        }
        if x.iter().all(|&v| v == x[0]) {
            return Err(Error::InvalidData(format!(
                "site {} is constant; ranks are undefined",
                data.sites().labels()[k]
            )));
        }
        let denom = (x.len() + 1) as f64;
        for (&i, r) in rows.iter().zip(average_ranks(&x)) {
            values[i * d + k] = r / denom;
        }
    }
    Ok(PseudoUniformData { n, d, values, sites: data.sites().clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sites(d: usize) -> SiteSet {
        SiteSet::from_coords((0..d).map(|i| [i as f64, 0.0]).collect()).unwrap()
    }

    fn column(v: &[Option<f64>]) -> Vec<Option<f64>> {
        let rows: Vec<Vec<Option<f64>>> = v.iter().map(|x| vec![*x]).collect();
        let data = Dataset::new(&rows, sites(1), None).unwrap();
        rank_transform(&data).unwrap().column(0)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(column(&[Some(5.0), Some(1.0), Some(3.0)]), vec![Some(0.75), Some(0.25), Some(0.5)]);
        let c = column(&[Some(5.0), None, Some(3.0)]);
        assert!((c[0].unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c[1], None);
        assert!((c[2].unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(column(&[Some(2.0), Some(2.0), Some(1.0)]), vec![Some(0.625), Some(0.625), Some(0.25)]);
    }

    #[test]
    fn constant_and_short_columns_rejected() {
        let rows = vec![vec![Some(1.0)], vec![Some(1.0)]];
        let data = Dataset::new(&rows, sites(1), None).unwrap();
        assert!(rank_transform(&data).is_err());
        let rows = vec![vec![Some(1.0)], vec![None]];
        assert!(Dataset::new(&rows, sites(1), None).is_err());
    }

    #[test]
    fn time_stamps_checked() {
        let rows = vec![vec![Some(1.0)], vec![Some(2.0)]];
        assert!(Dataset::new(&rows, sites(1), Some(vec![3, 1])).is_err());
        assert!(Dataset::new(&rows, sites(1), Some(vec![1])).is_err());
        assert_eq!(Dataset::new(&rows, sites(1), None).unwrap().time(), &[0, 1]);
    }

    #[test]
    fn ks_uniformity_of_ranks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 2000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>().powi(3), -rng.gen::<f64>().ln()]).collect();
        let u = rank_transform(&Dataset::from_matrix(&rows, sites(2)).unwrap()).unwrap();
        for k in 0..2 {
            let mut c: Vec<f64> = u.column(k).into_iter().flatten().collect();
            c.sort_by(f64::total_cmp);
            let dn = c
                .iter()
                .enumerate()
                .map(|(i, &v)| (v - i as f64 / n as f64).abs().max((v - (i + 1) as f64 / n as f64).abs()))
                .fold(0.0, f64::max);
            assert!(dn < 1.628 / (n as f64).sqrt(), "KS distance {dn}");
        }
    }

    proptest! {
        #[test]
        fn ranks_form_a_permutation(x in proptest::collection::vec(-1e3f64..1e3, 2..40)) {
            prop_assume!(x.iter().any(|&v| v != x[0]));
            let col: Vec<Option<f64>> = x.iter().map(|&v| Some(v)).collect();
            let u = column(&col);
            let m = x.len() as f64;
            let total: f64 = u.iter().map(|v| v.unwrap() * (m + 1.0)).sum();
            prop_assert!((total - m * (m + 1.0) / 2.0).abs() < 1e-8);
            for (a, ua) in x.iter().zip(&u) {
                let ua = ua.unwrap();
                prop_assert!(ua > 0.0 && ua < 1.0);
                for (b, ub) in x.iter().zip(&u) {
                    if a < b { prop_assert!(ua < ub.unwrap()); }
                }
            }
        }

        #[test]
        fn ranks_invariant_under_increasing_maps(x in proptest::collection::vec(-5f64..5.0, 3..30)) {
            prop_assume!(x.iter().any(|&v| v != x[0]));
            let a: Vec<Option<f64>> = x.iter().map(|&v| Some(v)).collect();
            let b: Vec<Option<f64>> = x.iter().map(|&v| Some(v.exp() * 3.0 + 1.0)).collect();
            prop_assert_eq!(column(&a), column(&b));
        }
    }
}
