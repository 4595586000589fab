use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::behavioral::{cv_lda_auc, lda_chance, trial_keys, TrialKey};
use super::folds::{chrono_folds, fold_rows, ChronoFold, FoldRows};
use super::neural::FittedMarker;
use super::permutation::PermutationResult;
use super::report::CvMetric;
use crate::error::{Error, Result};
use crate::model::{Modality, Session};

/// Frozen marker features of every included trial.
#[derive(Debug, Clone)]
pub struct MarkerFeatures {
    pub features: DMatrix<f64>,
    pub trials: Vec<TrialKey>,
}

impl MarkerFeatures {
    pub fn from_session(session: &Session, marker: &FittedMarker) -> Result<Self> {
        let included = session.included_trials();
        let trials = trial_keys(session);
        let rows = included
            .par_iter()
            .zip(&trials)
            .map(|(t, key)| {
                let epoch = t.data.neural.as_ref().ok_or(Error::MissingEpochs {
                    block: key.block_index,
                    trial: t.trial,
                })?;
                marker.features(epoch)
            })
            .collect::<Result<Vec<_>>>()?;
        let p = marker.selected.len();
        Ok(Self {
            features: DMatrix::from_fn(rows.len(), p, |r, c| rows[r][c]),
            trials,
        })
    }

    pub fn labels(&self) -> Vec<bool> {
        self.trials.iter().map(|t| t.condition.is_on()).collect()
    }

    pub fn row_blocks(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.block).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ControllabilityResult {
    pub auc: CvMetric,
    pub data: MarkerFeatures,
    pub folds: Vec<ChronoFold>,
    pub rows: Vec<FoldRows>,
}

/// ON/OFF decodability of the frozen marker features: only an LDA is
/// refit per chrono-CV fold.
pub fn controllability(session: &Session, marker: &FittedMarker) -> Result<ControllabilityResult> {
    let data = MarkerFeatures::from_session(session, marker)?;
    let folds = chrono_folds(session)?;
    let rows = fold_rows(&folds, &data.row_blocks());
    let values = cv_lda_auc(&data.features, &data.labels(), &rows, false)?;
    let auc = CvMetric::new(session, &folds, &rows, &values)?;
    Ok(ControllabilityResult { auc, data, folds, rows })
}

pub fn controllability_chance(result: &ControllabilityResult, n: usize, seed: u64) -> Result<PermutationResult> {
    lda_chance(&result.data.features, &result.data.labels(), &result.rows, false, n, seed)
}

/// Broadband time course of the leading selected marker feature: the SPoC
/// filter output for EEG, the channel itself for ECoG.
pub fn leading_source(marker: &FittedMarker, data: &DMatrix<f64>) -> Result<DVector<f64>> {
    let first = *marker.selected.first().ok_or(Error::EmptyTraining)?;
    match marker.modality {
        Modality::Eeg => {
            let w = DVector::from_column_slice(&marker.components[first].filter);
            Ok((w.transpose() * data).transpose())
        }
        Modality::Ecog => {
            let channel = first % marker.n_channels();
            Ok(data.row(channel).transpose())
        }
    }
}

/// Welch spectra (dB) of the leading source per trial, split by condition,
/// restricted to bins up to `max_freq`.
pub fn source_spectra(
    session: &Session,
    marker: &FittedMarker,
    segment: usize,
    max_freq: f64,
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let mut on = Vec::new();
    let mut off = Vec::new();
    let mut freqs = Vec::new();
    for t in session.included_trials() {
        let Some(epoch) = t.data.neural.as_ref() else {
            return Err(Error::MissingEpochs {
                block: session.blocks()[t.block].index,
                trial: t.trial,
            });
        };
        let source = leading_source(marker, epoch.data())?;
        let row = DMatrix::from_row_slice(1, source.len(), source.as_slice());
        let psd = crate::spoc::welch_rows(&row, epoch.sample_rate(), segment.min(source.len()), segment.min(source.len()) / 2)?;
        let keep = psd.freqs.iter().take_while(|&&f| f <= max_freq).count();
        freqs = psd.freqs[..keep].to_vec();
        let db: Vec<f64> = psd.density[0][..keep]
            .iter()
            .map(|v| 10.0 * v.max(f64::MIN_POSITIVE).log10())
            .collect();
        if t.condition.is_on() {
            on.push(db);
        } else {
            off.push(db);
        }
    }
    let to_matrix = |rows: &[Vec<f64>]| DMatrix::from_fn(rows.len(), freqs.len(), |r, c| rows[r][c]);
    Ok((freqs.clone(), to_matrix(&on), to_matrix(&off)))
}
