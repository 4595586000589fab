use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Ledoit-Wolf shrinkage towards the scaled identity.
///
/// Returns `((1 - δ)·S + δ·(tr S / p)·I, δ)` where `S` is the empirical
/// covariance with denominator `n` and `δ ∈ [0, 1]` the closed-form
/// optimal intensity.
pub fn ledoit_wolf_cov(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let nf = n as f64;
    let pf = p as f64;
    let s = centered.tr_mul(&centered) / nf;
    let mu = s.trace() / pf;

    let squared = centered.component_mul(&centered);
    // sum_k ||x_k||^4 generalised: sum_ij sum_k x_ki^2 x_kj^2
    let fourth = squared.tr_mul(&squared).sum();
    let s_norm2 = s.norm_squared();
    let beta = (fourth / nf - s_norm2) / (pf * nf);
    let delta = (s_norm2 - pf * mu * mu) / pf;
    let beta = beta.min(delta).max(0.0);
    let shrinkage = if beta == 0.0 { 0.0 } else { (beta / delta).clamp(0.0, 1.0) };

    let mut shrunk = s * (1.0 - shrinkage);
    for i in 0..p {
        shrunk[(i, i)] += shrinkage * mu;
    }
    Ok((shrunk, shrinkage))
}
