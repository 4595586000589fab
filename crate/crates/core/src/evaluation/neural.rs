use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::behavioral::{trial_keys, TrialKey};
use super::folds::{fold_rows, ChronoFold, FoldRows};
use super::permutation::{permutation_distribution, shuffled, PermutationResult};
use super::report::{mean_of_scored, BandCount, CvMetric};
use crate::error::{Error, Result};
use crate::linmodels::{fit_ridge, pearson_r, RidgeModel, DEFAULT_RIDGE_ALPHA};
use crate::model::{Modality, NeuralEpoch, Session};
use crate::mrmr::mrmr_select;
use crate::spoc::filter::{filter_rows, Bandpass};
use crate::spoc::{canonical_bands, ecog_feature_names, spoc_power_from_cov, FrequencyBand, SpocComponent, SpocProblem};

pub const MARKER_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Copydraw,
    TaskPerformance,
    /// Any externally supplied per-trial target.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralConfig {
    pub bands: Vec<FrequencyBand>,
    pub k_spoc: usize,
    pub k_select: usize,
    pub ridge_alpha: f64,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        Self {
            bands: canonical_bands(),
            k_spoc: 8,
            k_select: 8,
            ridge_alpha: DEFAULT_RIDGE_ALPHA,
        }
    }
}

#[derive(Debug, Clone)]
enum Bank {
    /// Per-band, per-trial covariance of the band-filtered epoch.
    Spoc { covs: Vec<Vec<DMatrix<f64>>>, k: usize },
    /// Log band power per trial, band-major over channels.
    Ecog { features: DMatrix<f64> },
}

/// Label-independent neural quantities of every usable trial, computed once.
#[derive(Debug, Clone)]
pub struct NeuralData {
    pub modality: Modality,
    pub config: NeuralConfig,
    pub channel_names: Vec<String>,
    pub sample_rate: f64,
    pub trials: Vec<TrialKey>,
    pub targets: Vec<f64>,
    pub n_dropped: usize,
    bank: Bank,
}

/// Covariance of each band-filtered copy of one epoch.
fn band_covs(epoch: &NeuralEpoch, filters: &[Bandpass]) -> Result<Vec<DMatrix<f64>>> {
    filters
        .iter()
        .map(|f| crate::spoc::spatial_cov(&filter_rows(f, epoch.data())))
        .collect()
}

fn band_log_powers(epoch: &NeuralEpoch, filters: &[Bandpass]) -> Vec<f64> {
    filters
        .iter()
        .flat_map(|f| crate::spoc::log_variances(&filter_rows(f, epoch.data())))
        .collect()
}

fn design_bank(bands: &[FrequencyBand], fs: f64) -> Result<Vec<Bandpass>> {
    bands.iter().map(|b| Bandpass::design(b, fs)).collect()
}

impl NeuralData {
    /// `targets` follows `Session::included_trials`; trials with a
    /// non-finite target (perfect task performance) are left out.
    pub fn from_session(session: &Session, targets: &[f64], config: &NeuralConfig) -> Result<Self> {
        let included = session.included_trials();
        if targets.len() != included.len() {
            return Err(Error::DimensionMismatch {
                expected: included.len(),
                got: targets.len(),
            });
        }
        let keys = trial_keys(session);
        let mut epochs = Vec::new();
        let mut trials = Vec::new();
        let mut kept_targets = Vec::new();
        for ((t, key), &z) in included.iter().zip(keys).zip(targets) {
            let epoch = t.data.neural.as_ref().ok_or(Error::MissingEpochs {
                block: key.block_index,
                trial: t.trial,
            })?;
            if z.is_finite() {
                epochs.push(epoch);
                trials.push(key);
                kept_targets.push(z);
            }
        }
        let first = *epochs.first().ok_or(Error::EmptyTraining)?;
        for e in &epochs {
            if e.n_channels() != first.n_channels() {
                return Err(Error::DimensionMismatch {
                    expected: first.n_channels(),
                    got: e.n_channels(),
                });
            }
            if e.sample_rate() != first.sample_rate() {
                return Err(Error::invariant("equal sample rates across epochs", session.id()));
            }
        }
        let filters = design_bank(&config.bands, first.sample_rate())?;
        let bank = match session.modality() {
            Modality::Eeg => {
                let per_trial = epochs
                    .par_iter()
                    .map(|e| band_covs(e, &filters))
                    .collect::<Result<Vec<_>>>()?;
                let covs = (0..filters.len())
                    .map(|b| per_trial.iter().map(|t| t[b].clone()).collect())
                    .collect();
                Bank::Spoc {
                    covs,
                    k: config.k_spoc.min(first.n_channels()),
                }
            }
            Modality::Ecog => {
                let rows: Vec<Vec<f64>> = epochs.par_iter().map(|e| band_log_powers(e, &filters)).collect();
                let p = rows[0].len();
                Bank::Ecog {
                    features: DMatrix::from_fn(rows.len(), p, |r, c| rows[r][c]),
                }
            }
        };
        Ok(Self {
            modality: session.modality(),
            config: config.clone(),
            channel_names: first.channel_names().to_vec(),
            sample_rate: first.sample_rate(),
            trials,
            targets: kept_targets,
            n_dropped: targets.len() - epochs.len(),
            bank,
        })
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.trials.iter().map(|t| t.condition.is_on()).collect()
    }

    pub fn row_blocks(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.block).collect()
    }

    pub fn bank_size(&self) -> usize {
        match &self.bank {
            Bank::Spoc { covs, k } => covs.len() * k,
            Bank::Ecog { features } => features.ncols(),
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        match &self.bank {
            Bank::Spoc { k, .. } => spoc_feature_names(&self.config.bands, *k),
            Bank::Ecog { .. } => ecog_feature_names(&self.channel_names, &self.config.bands),
        }
    }

    /// Cross-validation folds with the per-band SPoC problems of each
    /// training set prepared.
    pub fn prepare_cv(&self, folds: &[ChronoFold]) -> Result<NeuralCv> {
        let rows = fold_rows(folds, &self.row_blocks());
        let problems = rows
            .iter()
            .enumerate()
            .map(|(k, fold)| {
                if fold.train.is_empty() {
                    return Err(Error::EmptyTrain { fold: k });
                }
                self.problems(&fold.train)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NeuralCv {
            folds: folds.to_vec(),
            rows,
            problems,
        })
    }

    fn problems(&self, train: &[usize]) -> Result<Vec<SpocProblem>> {
        match &self.bank {
            Bank::Spoc { covs, .. } => covs
                .iter()
                .zip(&self.config.bands)
                .map(|(band_covs, band)| {
                    let sub: Vec<DMatrix<f64>> = train.iter().map(|&i| band_covs[i].clone()).collect();
                    SpocProblem::new(&sub, band.clone())
                })
                .collect(),
            Bank::Ecog { .. } => Ok(Vec::new()),
        }
    }

    /// Raw bank features of every trial for the given components.
    fn bank_matrix(&self, components: &[SpocComponent]) -> Result<DMatrix<f64>> {
        match &self.bank {
            Bank::Spoc { covs, k } => {
                let n = self.len();
                let mut out = DMatrix::zeros(n, components.len());
                for (c, comp) in components.iter().enumerate() {
                    let band_covs = &covs[c / k];
                    for i in 0..n {
                        out[(i, c)] = spoc_power_from_cov(&comp.filter, &band_covs[i])?;
                    }
                }
                Ok(out)
            }
            Bank::Ecog { features } => Ok(features.clone()),
        }
    }

    /// Fits SPoC, the standardization, MRMR and the ridge on `train` rows
    /// with targets `z` (indexed by row).
    fn fit(&self, train: &[usize], z: &[f64], problems: &[SpocProblem]) -> Result<FoldModel> {
        let z_train: Vec<f64> = train.iter().map(|&i| z[i]).collect();
        let components = match &self.bank {
            Bank::Spoc { k, .. } => problems
                .iter()
                .map(|p| p.solve(&z_train, *k))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect(),
            Bank::Ecog { .. } => Vec::new(),
        };
        let bank = self.bank_matrix(&components)?;
        let train_bank = bank.select_rows(train);
        let standardizer = Standardizer::fit(&train_bank);
        let train_std = standardizer.apply(&train_bank);

        let (t_mean, t_std) = mean_std(&z_train);
        if !(t_std > 0.0) {
            return Err(Error::DegenerateTarget);
        }
        let z_scaled: Vec<f64> = z_train.iter().map(|v| (v - t_mean) / t_std).collect();
        let selection = mrmr_select(&train_std, &z_scaled, self.config.k_select)?;
        let ridge = fit_ridge(&train_std.select_columns(&selection.selected), &z_scaled, self.config.ridge_alpha)?;
        Ok(FoldModel {
            components,
            standardizer,
            selected: selection.selected,
            ridge,
            target_mean: t_mean,
            target_std: t_std,
            bank,
        })
    }

    /// Chrono-CV Pearson r against `targets` (the session targets when
    /// `None`). Returns per-fold r and the out-of-fold predictions.
    pub fn cross_validate(&self, cv: &NeuralCv, targets: Option<&[f64]>) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
        let z = targets.unwrap_or(&self.targets);
        if z.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: z.len(),
            });
        }
        let mut predictions = vec![None; self.len()];
        let mut values = Vec::with_capacity(cv.rows.len());
        for (k, fold) in cv.rows.iter().enumerate() {
            let model = self.fit(&fold.train, z, &cv.problems[k])?;
            let pred: Vec<f64> = fold.test.iter().map(|&i| model.predict_row(i)).collect();
            let truth: Vec<f64> = fold.test.iter().map(|&i| z[i]).collect();
            for (&i, &p) in fold.test.iter().zip(&pred) {
                predictions[i] = Some(p);
            }
            values.push(match pearson_r(&pred, &truth) {
                Ok((r, _)) => Some(r),
                Err(Error::DegenerateVariance(_)) => Some(0.0),
                Err(Error::TooFewSamples { .. }) => None,
                Err(e) => return Err(e),
            });
        }
        Ok((values, predictions))
    }

    /// Refit on every trial, frozen for export.
    pub fn fit_marker(&self, target: TargetKind) -> Result<FittedMarker> {
        let all: Vec<usize> = (0..self.len()).collect();
        let problems = self.problems(&all)?;
        let model = self.fit(&all, &self.targets, &problems)?;
        Ok(FittedMarker {
            schema_version: MARKER_SCHEMA_VERSION,
            modality: self.modality,
            target,
            sample_rate: self.sample_rate,
            channel_names: self.channel_names.clone(),
            bands: self.config.bands.clone(),
            feature_names: self.feature_names(),
            components: model.components,
            selected: model.selected,
            feature_mean: model.standardizer.mean,
            feature_std: model.standardizer.std,
            ridge: model.ridge,
            target_mean: model.target_mean,
            target_std: model.target_std,
        })
    }
}

fn spoc_feature_names(bands: &[FrequencyBand], k: usize) -> Vec<String> {
    bands
        .iter()
        .flat_map(|b| (0..k).map(move |c| format!("{}_spoc{}", b.name, c)))
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Plain z-scoring with training statistics; constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &DMatrix<f64>) -> Self {
        let (mean, std) = x
            .column_iter()
            .map(|c| mean_std(&c.iter().copied().collect::<Vec<_>>()))
            .unzip();
        Self { mean, std }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| standardize(x[(r, c)], self.mean[c], self.std[c]))
    }
}

fn standardize(v: f64, mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        (v - mean) / std
    } else {
        0.0
    }
}

struct FoldModel {
    components: Vec<SpocComponent>,
    standardizer: Standardizer,
    selected: Vec<usize>,
    ridge: RidgeModel,
    target_mean: f64,
    target_std: f64,
    /// Bank features of every trial under this fold's components.
    bank: DMatrix<f64>,
}

impl FoldModel {
    fn predict_row(&self, i: usize) -> f64 {
        let x: Vec<f64> = self
            .selected
            .iter()
            .map(|&c| standardize(self.bank[(i, c)], self.standardizer.mean[c], self.standardizer.std[c]))
            .collect();
        self.ridge.predict_row(&x) * self.target_std + self.target_mean
    }
}

/// Folds, their row split, and per-fold SPoC problems.
#[derive(Debug, Clone)]
pub struct NeuralCv {
    pub folds: Vec<ChronoFold>,
    pub rows: Vec<FoldRows>,
    problems: Vec<Vec<SpocProblem>>,
}

/// A regression marker frozen after training, applicable to new epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedMarker {
    pub schema_version: u32,
    pub modality: Modality,
    pub target: TargetKind,
    pub sample_rate: f64,
    pub channel_names: Vec<String>,
    pub bands: Vec<FrequencyBand>,
    /// Whole bank, names band-major.
    pub feature_names: Vec<String>,
    /// SPoC components in bank order; empty for ECoG band power.
    pub components: Vec<SpocComponent>,
    pub selected: Vec<usize>,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    /// Acts on the standardized selected features; outputs standardized target.
    pub ridge: RidgeModel,
    pub target_mean: f64,
    pub target_std: f64,
}

impl FittedMarker {
    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    /// Raw log-power bank of one epoch.
    pub fn bank_features(&self, epoch: &NeuralEpoch) -> Result<Vec<f64>> {
        if epoch.n_channels() != self.n_channels() {
            return Err(Error::DimensionMismatch {
                expected: self.n_channels(),
                got: epoch.n_channels(),
            });
        }
        let filters = design_bank(&self.bands, epoch.sample_rate())?;
        match self.modality {
            Modality::Ecog => Ok(band_log_powers(epoch, &filters)),
            Modality::Eeg => {
                let covs = band_covs(epoch, &filters)?;
                self.components
                    .iter()
                    .map(|comp| {
                        let b = self
                            .bands
                            .iter()
                            .position(|band| band == &comp.band)
                            .ok_or_else(|| Error::schema("marker", format!("component band {} not in bank", comp.band.name)))?;
                        spoc_power_from_cov(&comp.filter, &covs[b])
                    })
                    .collect()
            }
        }
    }

    /// Standardized selected features of one epoch.
    pub fn features(&self, epoch: &NeuralEpoch) -> Result<Vec<f64>> {
        let bank = self.bank_features(epoch)?;
        Ok(self
            .selected
            .iter()
            .map(|&c| standardize(bank[c], self.feature_mean[c], self.feature_std[c]))
            .collect())
    }

    pub fn predict(&self, epoch: &NeuralEpoch) -> Result<f64> {
        Ok(self.ridge.predict_row(&self.features(epoch)?) * self.target_std + self.target_mean)
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected.iter().map(|&i| self.feature_names[i].clone()).collect()
    }

    /// How many selected features fall in each band.
    pub fn band_counts(&self) -> Vec<BandCount> {
        let per_band = self.feature_names.len() / self.bands.len().max(1);
        self.bands
            .iter()
            .enumerate()
            .map(|(b, band)| BandCount {
                band: band.name.clone(),
                count: self.selected.iter().filter(|&&i| i / per_band == b).count(),
            })
            .collect()
    }

    /// Selected SPoC components in selection order.
    pub fn selected_components(&self) -> Vec<&SpocComponent> {
        self.selected.iter().filter_map(|&i| self.components.get(i)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "marker".into(),
            source,
        })
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let marker: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: context.into(),
            source,
        })?;
        if marker.schema_version != MARKER_SCHEMA_VERSION {
            return Err(Error::schema(
                context,
                format!("unsupported marker schema version {}", marker.schema_version),
            ));
        }
        let p = marker.feature_names.len();
        let consistent = marker.feature_mean.len() == p
            && marker.feature_std.len() == p
            && marker.selected.iter().all(|&i| i < p)
            && marker.ridge.weights.len() == marker.selected.len()
            && (marker.modality == Modality::Ecog || marker.components.len() == p)
            && marker.components.iter().all(|c| c.filter.len() == marker.channel_names.len());
        if !consistent {
            return Err(Error::schema(context, "marker arrays have inconsistent lengths"));
        }
        Ok(marker)
    }
}

#[derive(Debug, Clone)]
pub struct NeuralResult {
    pub r: CvMetric,
    /// Out-of-fold prediction per row of the data; `None` for rows never tested.
    pub predictions: Vec<Option<f64>>,
    pub marker: FittedMarker,
}

pub fn neural_decode(
    session: &Session,
    targets: &[f64],
    target: TargetKind,
    config: &NeuralConfig,
) -> Result<(NeuralData, NeuralCv, NeuralResult)> {
    let data = NeuralData::from_session(session, targets, config)?;
    let folds = super::folds::chrono_folds(session)?;
    let cv = data.prepare_cv(&folds)?;
    let (values, predictions) = data.cross_validate(&cv, None)?;
    let r = CvMetric::new(session, &cv.folds, &cv.rows, &values)?;
    let marker = data.fit_marker(target)?;
    Ok((
        data,
        cv,
        NeuralResult {
            r,
            predictions,
            marker,
        },
    ))
}

/// Mean chrono-CV r with the targets shuffled across trials, `n` times.
pub fn neural_chance(data: &NeuralData, cv: &NeuralCv, n: usize, seed: u64) -> Result<PermutationResult> {
    permutation_distribution(n, seed, |rng| {
        let (values, _) = data.cross_validate(cv, Some(&shuffled(&data.targets, rng)))?;
        mean_of_scored(&values)
    })
}
