use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::band::FrequencyBand;
use crate::error::{Error, Result};
use crate::model::NeuralEpoch;

/// Relative ridge added to the average covariance before the eigensolve.
pub const EIGEN_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpocComponent {
    /// Spatial filter, scaled so that `wᵀCw = 1` under the training covariance.
    pub filter: Vec<f64>,
    /// Unit-norm activation pattern `C w`, signed so its largest entry is positive.
    pub pattern: Vec<f64>,
    /// Covariance between projected power and the standardized target.
    pub lambda: f64,
    pub band: FrequencyBand,
}

impl SpocComponent {
    pub fn n_channels(&self) -> usize {
        self.filter.len()
    }
}

/// Mean-removed sample covariance `X Xᵀ / n` of one epoch.
pub fn epoch_cov(epoch: &NeuralEpoch) -> Result<DMatrix<f64>> {
    cov_of(epoch.data())
}

pub(crate) fn cov_of(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = data.ncols();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        let m = row.mean();
        row.add_scalar_mut(-m);
    }
    let c = &centered * centered.transpose() / n as f64;
    // exact symmetry for the eigensolver
    Ok((&c + c.transpose()) * 0.5)
}

/// `C + ε·(tr C / p)·I`.
pub fn regularize(c: &DMatrix<f64>) -> DMatrix<f64> {
    let p = c.nrows();
    let mut out = c.clone();
    let shift = EIGEN_RIDGE * c.trace() / p as f64;
    for i in 0..p {
        out[(i, i)] += shift;
    }
    out
}

/// Training covariances of one band, pre-whitened once so that targets can
/// be swapped (cross-validation, permutations) at the cost of one small
/// symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpocProblem {
    band: FrequencyBand,
    average: DMatrix<f64>,
    /// `L⁻ᵀ` where `LLᵀ` is the regularized average covariance.
    unwhiten: DMatrix<f64>,
    whitened: Vec<DMatrix<f64>>,
}

impl SpocProblem {
    pub fn new(covs: &[DMatrix<f64>], band: FrequencyBand) -> Result<Self> {
        let first = covs.first().ok_or(Error::EmptyTraining)?;
        let p = first.nrows();
        for c in covs {
            if c.nrows() != p || c.ncols() != p {
                return Err(Error::DimensionMismatch { expected: p, got: c.nrows() });
            }
        }
        let mut mean = DMatrix::zeros(p, p);
        for c in covs {
            mean += c;
        }
        mean /= covs.len() as f64;
        let average = regularize(&mean);
        if !(average.trace() > 0.0) {
            return Err(Error::EigenFailure("average covariance has zero trace".into()));
        }
        let chol = Cholesky::new(average.clone())
            .ok_or_else(|| Error::EigenFailure("average covariance is not positive definite".into()))?;
        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
        let whitened = covs.iter().map(|c| &l_inv * c * l_inv.transpose()).collect();
        Ok(Self {
            band,
            average,
            unwhiten: l_inv.transpose(),
            whitened,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.average.nrows()
    }

    pub fn n_epochs(&self) -> usize {
        self.whitened.len()
    }

    /// Regularized average covariance.
    pub fn average(&self) -> &DMatrix<f64> {
        &self.average
    }

    /// Top-`k` components by |λ| for target `z` (standardized here).
    pub fn solve(&self, z: &[f64], k: usize) -> Result<Vec<SpocComponent>> {
        let p = self.n_channels();
        if z.len() != self.n_epochs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_epochs(),
                got: z.len(),
            });
        }
        if k == 0 {
            return Err(Error::KInvalid(0));
        }
        if k > p {
            return Err(Error::KTooLarge { k, available: p });
        }
        let z = standardize(z)?;
        let mut target = DMatrix::zeros(p, p);
        for (m, ze) in self.whitened.iter().zip(&z) {
            target += m * *ze;
        }
        target /= z.len() as f64;
        let target = (&target + target.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(target, f64::EPSILON, 0)
            .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenFailure("non-finite eigenvalue".into()));
        }

        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| {
                let w = &self.unwhiten * eig.eigenvectors.column(i);
                component(w, eig.eigenvalues[i], &self.average, &self.band)
            })
            .collect())
    }
}

fn standardize(z: &[f64]) -> Result<Vec<f64>> {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let std = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // a constant target leaves only rounding error in the spread
    if !(std > 1e-12 * scale) || !std.is_finite() {
        return Err(Error::DegenerateTarget);
    }
    Ok(z.iter().map(|v| (v - mean) / std).collect())
}

fn component(mut w: DVector<f64>, lambda: f64, c: &DMatrix<f64>, band: &FrequencyBand) -> SpocComponent {
    let mut a = c * &w;
    let norm = a.norm();
    if norm > 0.0 {
        a /= norm;
    }
    let lead = a.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if lead < 0.0 {
        a.neg_mut();
        w.neg_mut();
    }
    SpocComponent {
        filter: w.iter().copied().collect(),
        pattern: a.iter().copied().collect(),
        lambda,
        band: band.clone(),
    }
}

/// SPoC on band-filtered epochs.
pub fn fit_spoc(epochs: &[NeuralEpoch], z: &[f64], k: usize, band: &FrequencyBand) -> Result<Vec<SpocComponent>> {
    let covs = epochs.iter().map(epoch_cov).collect::<Result<Vec<_>>>()?;
    fit_spoc_from_covs(&covs, z, k, band)
}

pub fn fit_spoc_from_covs(
    covs: &[DMatrix<f64>],
    z: &[f64],
    k: usize,
    band: &FrequencyBand,
) -> Result<Vec<SpocComponent>> {
    SpocProblem::new(covs, band.clone())?.solve(z, k)
}

/// Log of the projected power `wᵀ C_e w` of a band-filtered epoch.
pub fn spoc_power(component: &SpocComponent, epoch: &NeuralEpoch) -> Result<f64> {
    if epoch.n_channels() != component.n_channels() {
        return Err(Error::DimensionMismatch {
            expected: component.n_channels(),
            got: epoch.n_channels(),
        });
    }
    spoc_power_from_cov(&component.filter, &epoch_cov(epoch)?)
}

pub fn spoc_power_from_cov(filter: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    let p = filter.len();
    if cov.nrows() != p || cov.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, got: cov.nrows() });
    }
    let w = DVector::from_column_slice(filter);
    let power = w.dot(&(cov * &w));
    Ok(power.max(f64::MIN_POSITIVE).ln())
}

/// Activation patterns `A = C W (WᵀCW)⁻¹` of the filter columns `W`.
pub fn patterns(filters: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if c.nrows() != filters.nrows() || c.ncols() != filters.nrows() {
        return Err(Error::DimensionMismatch {
            expected: filters.nrows(),
            got: c.nrows(),
        });
    }
    let cw = c * filters;
    let gram = filters.transpose() * &cw;
    let max_diag = gram.diagonal().max();
    let chol = Cholesky::new(gram).ok_or(Error::SingularProjection)?;
    if chol.l_dirty().diagonal().iter().any(|l| !(l * l > 1e-12 * max_diag)) {
        return Err(Error::SingularProjection);
    }
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularProjection);
    }
    Ok(cw * inv)
}
