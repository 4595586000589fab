//! Linear models and scalar statistics: shrinkage LDA, ridge regression,
//! exact linear SHAP, and the test statistics used in reports.

mod covariance;
mod lda;
mod ridge;
pub mod stats;

pub use covariance::ledoit_wolf_cov;
pub use lda::{decision_scores, fit_lda, linear_shap, LdaModel, ShapAttribution};
pub use ridge::{fit_ridge, RidgeModel, DEFAULT_RIDGE_ALPHA};
pub use stats::{icc, mann_whitney_u, ols_fit, pearson_r, roc_auc, welch_t, OlsFit};
