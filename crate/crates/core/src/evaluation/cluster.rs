use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::permutation::permutation_distribution;
use crate::error::{Error, Result};
use crate::linmodels::stats::welch_statistic;

/// A run of adjacent supra-threshold bins sharing the sign of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// First and last bin, inclusive.
    pub start: usize,
    pub end: usize,
    pub mass: f64,
    pub positive: bool,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTest {
    pub t: Vec<f64>,
    pub threshold: f64,
    pub clusters: Vec<Cluster>,
    pub null_max_mass: Vec<f64>,
    pub report_alpha: f64,
}

impl ClusterTest {
    pub fn significant(&self) -> Vec<&Cluster> {
        self.clusters.iter().filter(|c| c.p_value < self.report_alpha).collect()
    }
}

fn column(m: &DMatrix<f64>, rows: &[usize], bin: usize) -> Vec<f64> {
    rows.iter().map(|&r| m[(r, bin)]).collect()
}

fn bin_t(pooled: &DMatrix<f64>, a: &[usize], b: &[usize]) -> Vec<f64> {
    (0..pooled.ncols())
        .map(|bin| {
            let (t, _) = welch_statistic(&column(pooled, a, bin), &column(pooled, b, bin));
            if t.is_nan() {
                0.0
            } else {
                t
            }
        })
        .collect()
}

fn find_clusters(t: &[f64], threshold: f64) -> Vec<(usize, usize, f64, bool)> {
    let mut out: Vec<(usize, usize, f64, bool)> = Vec::new();
    let mut open = false;
    for (i, &v) in t.iter().enumerate() {
        if v.abs() <= threshold {
            open = false;
            continue;
        }
        let positive = v > 0.0;
        match out.last_mut() {
            Some(c) if open && c.3 == positive => {
                c.1 = i;
                c.2 += v.abs();
            }
            _ => out.push((i, i, v.abs(), positive)),
        }
        open = true;
    }
    out
}

/// Two-sample cluster-mass permutation test over bins (columns).
pub fn cluster_permutation_test(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    n_perm: usize,
    cluster_alpha: f64,
    report_alpha: f64,
    seed: u64,
) -> Result<ClusterTest> {
    for m in [a, b] {
        if m.nrows() < 2 {
            return Err(Error::TooFewTrials { needed: 2, got: m.nrows() });
        }
    }
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    let (na, nb) = (a.nrows(), b.nrows());
    let df = (na + nb - 2) as f64;
    let threshold = StudentsT::new(0.0, 1.0, df)
        .expect("df is positive")
        .inverse_cdf(1.0 - cluster_alpha / 2.0);
    let pooled = DMatrix::from_fn(na + nb, a.ncols(), |r, c| if r < na { a[(r, c)] } else { b[(r - na, c)] });
    let rows: Vec<usize> = (0..na + nb).collect();

    let t = bin_t(&pooled, &rows[..na], &rows[na..]);
    let observed = find_clusters(&t, threshold);
    let null = permutation_distribution(n_perm, seed, |rng| {
        let mut perm = rows.clone();
        perm.shuffle(rng);
        let t = bin_t(&pooled, &perm[..na], &perm[na..]);
        Ok(find_clusters(&t, threshold).iter().map(|c| c.2).fold(0.0, f64::max))
    })?
    .distribution;
    let clusters = observed
        .into_iter()
        .map(|(start, end, mass, positive)| {
            let exceed = null.iter().filter(|&&m| m >= mass).count();
            Cluster {
                start,
                end,
                mass,
                positive,
                p_value: (1 + exceed) as f64 / (n_perm + 1) as f64,
            }
        })
        .collect();
    Ok(ClusterTest {
        t,
        threshold,
        clusters,
        null_max_mass: null,
        report_alpha,
    })
}
