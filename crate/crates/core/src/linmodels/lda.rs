use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::covariance::ledoit_wolf_cov;
use crate::error::{Error, Result};

/// Two-class LDA with a shrunk pooled covariance.
///
/// `decision(x) = w·x + b`; positive values lean towards the ON class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean_on: Vec<f64>,
    pub mean_off: Vec<f64>,
    pub shrinkage: f64,
    /// Whether (w, b) were negated to put the ON training mean at >= 0.
    pub flipped: bool,
}

impl LdaModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

fn class_mean(x: &DMatrix<f64>, labels: &[bool], class: bool) -> DVector<f64> {
    let mut sum = DVector::zeros(x.ncols());
    let mut n = 0usize;
    for (row, _) in x.row_iter().zip(labels).filter(|(_, &l)| l == class) {
        sum += row.transpose();
        n += 1;
    }
    sum / n as f64
}

/// Solves `a·w = b` for symmetric PSD `a`, falling back to the
/// pseudo-inverse when `a` is singular.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    match a.clone().cholesky() {
        Some(chol) => chol.solve(b),
        None => a
            .clone()
            .pseudo_inverse(1e-12 * a.diagonal().amax().max(f64::MIN_POSITIVE))
            .map(|inv| inv * b)
            .unwrap_or_else(|_| DVector::zeros(b.len())),
    }
}

/// `labels[i]` is true for DBS ON.
pub fn fit_lda(x: &DMatrix<f64>, labels: &[bool]) -> Result<LdaModel> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: labels.len(),
        });
    }
    let n_on = labels.iter().filter(|&&l| l).count();
    let n_off = labels.len() - n_on;
    if n_on == 0 || n_off == 0 {
        return Err(Error::SingleClass);
    }
    if n_on < 2 || n_off < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: n_on.min(n_off),
        });
    }
    let mu_on = class_mean(x, labels, true);
    let mu_off = class_mean(x, labels, false);

    let mut within = x.clone();
    for (mut row, &l) in within.row_iter_mut().zip(labels) {
        row -= if l { mu_on.transpose() } else { mu_off.transpose() };
    }
    let (sigma, shrinkage) = ledoit_wolf_cov(&within)?;

    let mut w = solve_spd(&sigma, &(&mu_on - &mu_off));
    let mut bias = -w.dot(&(&mu_on + &mu_off)) / 2.0;
    let on_mean_decision = w.dot(&mu_on) + bias;
    let flipped = on_mean_decision < 0.0;
    if flipped {
        w = -w;
        bias = -bias;
    }
    Ok(LdaModel {
        weights: w.iter().copied().collect(),
        bias,
        mean_on: mu_on.iter().copied().collect(),
        mean_off: mu_off.iter().copied().collect(),
        shrinkage,
        flipped,
    })
}

/// `w·x + b` for every row; the CopyDraw score on behavioral features.
pub fn decision_scores(model: &LdaModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: x.ncols(),
        });
    }
    let w = DVector::from_column_slice(&model.weights);
    Ok((x * w).iter().map(|v| v + model.bias).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapAttribution {
    /// trials x features
    pub values: DMatrix<f64>,
    pub base: f64,
}

impl ShapAttribution {
    pub fn mean_abs(&self) -> Vec<f64> {
        self.values
            .column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>() / c.len().max(1) as f64)
            .collect()
    }
}

/// Exact interventional Shapley values of a linear model:
/// `φ_i(x) = w_i·(x_i − background_i)`, base `w·background + b`.
pub fn linear_shap(model: &LdaModel, x: &DMatrix<f64>, background_mean: &[f64]) -> Result<ShapAttribution> {
    let p = model.n_features();
    for got in [x.ncols(), background_mean.len()] {
        if got != p {
            return Err(Error::DimensionMismatch { expected: p, got });
        }
    }
    let values = DMatrix::from_fn(x.nrows(), p, |r, c| model.weights[c] * (x[(r, c)] - background_mean[c]));
    Ok(ShapAttribution {
        values,
        base: model.decision(background_mean),
    })
}
