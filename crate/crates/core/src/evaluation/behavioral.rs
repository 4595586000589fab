use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{fold_rows, ChronoFold, FoldRows};
use super::permutation::{permutation_distribution, shuffled, PermutationResult};
use super::report::{CvMetric, NamedValue};
use crate::error::{Error, Result};
use crate::kinematics::{FeatureScaler, FeatureSet};
use crate::linmodels::{decision_scores, fit_lda, icc, linear_shap, roc_auc, LdaModel};
use crate::model::{DbsCondition, Session};

/// Where a data row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialKey {
    /// Position of the block in the session.
    pub block: usize,
    /// The block's own index as recorded in the manifest.
    pub block_index: usize,
    pub trial: usize,
    pub condition: DbsCondition,
}

pub(crate) fn trial_keys(session: &Session) -> Vec<TrialKey> {
    session
        .included_trials()
        .iter()
        .map(|t| TrialKey {
            block: t.block,
            block_index: session.blocks()[t.block].index,
            trial: t.trial,
            condition: t.condition,
        })
        .collect()
}

/// Kinematic features of every included trial, one row per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralData {
    pub feature_set: FeatureSet,
    pub names: Vec<String>,
    pub features: DMatrix<f64>,
    pub trials: Vec<TrialKey>,
}

impl BehavioralData {
    pub fn from_session(session: &Session, set: FeatureSet) -> Result<Self> {
        let included = session.included_trials();
        let rows = included
            .par_iter()
            .map(|t| {
                set.extract(&t.data.trace).map_err(|e| match e {
                    Error::TooFewSamples { .. } | Error::TooFewPoints { .. } => Error::invariant(
                        e.to_string(),
                        format!("block {} trial {}", session.blocks()[t.block].index, t.trial),
                    ),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            feature_set: set,
            names: set.names(),
            features: crate::kinematics::feature_matrix(&rows),
            trials: trial_keys(session),
        })
    }

    pub fn labels(&self) -> Vec<bool> {
        self.trials.iter().map(|t| t.condition.is_on()).collect()
    }

    pub fn row_blocks(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.block).collect()
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

fn rows_of(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    x.select_rows(idx)
}

fn has_both(labels: &[bool], idx: &[usize], min_each: usize) -> bool {
    let on = idx.iter().filter(|&&i| labels[i]).count();
    on >= min_each && idx.len() - on >= min_each
}

/// ROC AUC of a per-fold LDA. Folds without two trials of each class in
/// training, or without both classes in test, yield `None`.
pub fn cv_lda_auc(x: &DMatrix<f64>, labels: &[bool], rows: &[FoldRows], scale: bool) -> Result<Vec<Option<f64>>> {
    rows.iter()
        .map(|fold| {
            if !has_both(labels, &fold.train, 2) || !has_both(labels, &fold.test, 1) {
                return Ok(None);
            }
            let (train, test) = (rows_of(x, &fold.train), rows_of(x, &fold.test));
            let (train, test) = if scale {
                let scaler = FeatureScaler::fit(&train)?;
                (scaler.transform(&train)?, scaler.transform(&test)?)
            } else {
                (train, test)
            };
            let y: Vec<bool> = fold.train.iter().map(|&i| labels[i]).collect();
            let model = fit_lda(&train, &y)?;
            let scores = decision_scores(&model, &test)?;
            let truth: Vec<bool> = fold.test.iter().map(|&i| labels[i]).collect();
            roc_auc(&scores, &truth).map(Some)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralResult {
    pub auc: CvMetric,
    /// Session-wide CopyDraw score of every row.
    pub scores: Vec<f64>,
    pub icc: f64,
    pub shap: Vec<NamedValue>,
    pub model: LdaModel,
    pub scaler: FeatureScaler,
}

pub fn behavioral_decode(session: &Session, set: FeatureSet) -> Result<(BehavioralData, BehavioralResult)> {
    let data = BehavioralData::from_session(session, set)?;
    let folds = super::folds::chrono_folds(session)?;
    let result = decode_features(session, &data, &folds)?;
    Ok((data, result))
}

pub fn decode_features(session: &Session, data: &BehavioralData, folds: &[ChronoFold]) -> Result<BehavioralResult> {
    let labels = data.labels();
    let rows = fold_rows(folds, &data.row_blocks());
    let values = cv_lda_auc(&data.features, &labels, &rows, true)?;
    let auc = CvMetric::new(session, folds, &rows, &values)?;

    let (model, scaler, scaled) = full_model(&data.features, &labels)?;
    let scores = decision_scores(&model, &scaled)?;
    let background: Vec<f64> = scaled.row_mean().iter().copied().collect();
    let shap = linear_shap(&model, &scaled, &background)?
        .mean_abs()
        .into_iter()
        .zip(&data.names)
        .map(|(value, name)| NamedValue {
            name: name.clone(),
            value,
        })
        .collect();
    let icc = icc(&scores, &labels)?;
    Ok(BehavioralResult {
        auc,
        scores,
        icc,
        shap,
        model,
        scaler,
    })
}

/// LDA on all rows; its decision values are the CopyDraw scores.
pub fn full_model(x: &DMatrix<f64>, labels: &[bool]) -> Result<(LdaModel, FeatureScaler, DMatrix<f64>)> {
    let scaler = FeatureScaler::fit(x)?;
    let scaled = scaler.transform(x)?;
    let model = fit_lda(&scaled, labels)?;
    Ok((model, scaler, scaled))
}

/// Session-wide CopyDraw scores without the cross-validation.
pub fn copydraw_scores(session: &Session, set: FeatureSet) -> Result<Vec<f64>> {
    let data = BehavioralData::from_session(session, set)?;
    let (model, _, scaled) = full_model(&data.features, &data.labels())?;
    decision_scores(&model, &scaled)
}

/// Mean chrono-CV AUC with shuffled training labels, `n` times.
pub fn behavioral_chance(data: &BehavioralData, folds: &[ChronoFold], n: usize, seed: u64) -> Result<PermutationResult> {
    lda_chance(&data.features, &data.labels(), &fold_rows(folds, &data.row_blocks()), true, n, seed)
}

pub(crate) fn lda_chance(
    x: &DMatrix<f64>,
    labels: &[bool],
    rows: &[FoldRows],
    scale: bool,
    n: usize,
    seed: u64,
) -> Result<PermutationResult> {
    permutation_distribution(n, seed, |rng| {
        let values = cv_lda_auc(x, &shuffled(labels, rng), rows, scale)?;
        super::report::mean_of_scored(&values)
    })
}
