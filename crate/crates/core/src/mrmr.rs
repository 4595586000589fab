//! Greedy minimum-redundancy maximum-relevance feature selection with
//! absolute Pearson correlation as both relevance and redundancy measure.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_TRIALS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Feature indices in the order they were picked.
    pub selected: Vec<usize>,
    /// Relevance of each pick.
    pub relevance: Vec<f64>,
    /// Mean redundancy of each pick against the earlier ones (0 for the first).
    pub redundancy: Vec<f64>,
}

impl SelectionResult {
    pub fn scores(&self) -> Vec<f64> {
        self.relevance.iter().zip(&self.redundancy).map(|(a, b)| a - b).collect()
    }
}

/// Column-standardized copy; constant columns become all zeros so every
/// correlation with them is 0.
fn standardized_columns(f: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = f.nrows() as f64;
    f.column_iter()
        .map(|col| {
            let m = col.sum() / n;
            let ss = col.iter().map(|v| (v - m).powi(2)).sum::<f64>();
            let scale = ss.sqrt();
            // relative guard against round-off variance of constant columns
            if scale <= 1e-12 * m.abs() * n.sqrt() {
                vec![0.0; col.len()]
            } else {
                col.iter().map(|v| (v - m) / scale).collect()
            }
        })
        .collect()
}

fn abs_corr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs().min(1.0)
}

pub fn mrmr_select(f: &DMatrix<f64>, z: &[f64], k: usize) -> Result<SelectionResult> {
    let (n, p) = f.shape();
    if k == 0 {
        return Err(Error::KInvalid(0));
    }
    if n < MIN_TRIALS {
        return Err(Error::TooFewTrials {
            needed: MIN_TRIALS,
            got: n,
        });
    }
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    if f.iter().chain(z).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateVariance("non-finite feature or target"));
    }
    let cols = standardized_columns(f);
    let target = standardized_columns(&DMatrix::from_column_slice(n, 1, z)).remove(0);
    let relevance: Vec<f64> = cols.iter().map(|c| abs_corr(c, &target)).collect();

    let k = k.min(p);
    let mut result = SelectionResult {
        selected: Vec::with_capacity(k),
        relevance: Vec::with_capacity(k),
        redundancy: Vec::with_capacity(k),
    };
    let mut redundancy_sum = vec![0.0; p];
    let mut taken = vec![false; p];
    for step in 0..k {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in (0..p).filter(|&j| !taken[j]) {
            let red = if step == 0 { 0.0 } else { redundancy_sum[j] / step as f64 };
            let score = relevance[j] - red;
            if best.is_none_or(|(_, s, _)| score > s) {
                best = Some((j, score, red));
            }
        }
        let (j, _, red) = best.expect("k is capped at the feature count");
        taken[j] = true;
        result.selected.push(j);
        result.relevance.push(relevance[j]);
        result.redundancy.push(red);
        for (i, sum) in redundancy_sum.iter_mut().enumerate() {
            if !taken[i] {
                *sum += abs_corr(&cols[i], &cols[j]);
            }
        }
    }
    Ok(result)
}
