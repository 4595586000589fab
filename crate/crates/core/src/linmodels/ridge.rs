use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lda::solve_spd;
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE_ALPHA: f64 = 1.0;

/// L2-regularized least squares with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub alpha: f64,
}

impl RidgeModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.ncols(),
            });
        }
        Ok(x.row_iter()
            .map(|r| r.iter().zip(&self.weights).map(|(v, w)| v * w).sum::<f64>() + self.bias)
            .collect())
    }
}

/// Solves `(XcᵀXc + αI) w = Xcᵀ(z − z̄)` on column-centered `X`; the
/// intercept restores the means. For z-scored inputs it equals `mean(z)`.
pub fn fit_ridge(x: &DMatrix<f64>, z: &[f64], alpha: f64) -> Result<RidgeModel> {
    let (n, p) = x.shape();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    if n == 0 {
        return Err(Error::EmptyTraining);
    }
    let x_mean = x.row_mean();
    let z_mean = z.iter().sum::<f64>() / n as f64;
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= &x_mean;
    }
    let zc = DVector::from_iterator(n, z.iter().map(|v| v - z_mean));
    let mut gram = xc.tr_mul(&xc);
    for i in 0..p {
        gram[(i, i)] += alpha;
    }
    let w = solve_spd(&gram, &xc.tr_mul(&zc));
    let bias = z_mean - w.dot(&x_mean.transpose());
    Ok(RidgeModel {
        weights: w.iter().copied().collect(),
        bias,
        alpha,
    })
}
