use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::cluster::Cluster;
use super::folds::{ChronoFold, FoldRows};
use super::neural::TargetKind;
use super::outcome::Outcome;
use super::permutation::PermutationResult;
use crate::error::{Error, Result};
use crate::kinematics::FeatureSet;
use crate::model::Session;
use crate::spoc::{canonical_bands, FrequencyBand};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything that determines a run's numbers. Worker count is
/// deliberately absent: results must not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sessions: Vec<PathBuf>,
    pub feature_set: FeatureSet,
    pub bands: Vec<FrequencyBand>,
    pub k_spoc: usize,
    pub k_select: usize,
    pub ridge_alpha: f64,
    pub n_perm: usize,
    pub icc_threshold: f64,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sessions: Vec::new(),
            feature_set: FeatureSet::Standard,
            bands: canonical_bands(),
            k_spoc: 8,
            k_select: 8,
            ridge_alpha: crate::linmodels::DEFAULT_RIDGE_ALPHA,
            n_perm: super::permutation::DEFAULT_N_PERM,
            icc_threshold: super::outcome::DEFAULT_ICC_THRESHOLD,
            seed: 0,
            output: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetric {
    pub fold: usize,
    /// Session block indices (not positions) of the test pair.
    pub test_on_block: usize,
    pub test_off_block: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// `None` when the fold could not be scored (a class missing).
    pub value: Option<f64>,
}

/// A cross-validated metric with its permutation chance level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvMetric {
    pub folds: Vec<FoldMetric>,
    pub mean: f64,
    pub chance: Option<f64>,
    pub n_perm: usize,
    pub significant: Option<bool>,
}

impl CvMetric {
    pub fn new(session: &Session, folds: &[ChronoFold], rows: &[FoldRows], values: &[Option<f64>]) -> Result<Self> {
        let per_fold = folds
            .iter()
            .zip(rows)
            .zip(values)
            .enumerate()
            .map(|(k, ((f, r), v))| FoldMetric {
                fold: k,
                test_on_block: session.blocks()[f.test_on_block].index,
                test_off_block: session.blocks()[f.test_off_block].index,
                n_train: r.train.len(),
                n_test: r.test.len(),
                value: *v,
            })
            .collect();
        Ok(Self {
            folds: per_fold,
            mean: mean_of_scored(values)?,
            chance: None,
            n_perm: 0,
            significant: None,
        })
    }

    pub fn with_chance(mut self, perm: &PermutationResult) -> Self {
        self.chance = Some(perm.chance);
        self.n_perm = perm.distribution.len();
        self.significant = Some(self.mean > perm.chance);
        self
    }
}

/// Arithmetic mean of the folds that produced a value.
pub fn mean_of_scored(values: &[Option<f64>]) -> Result<f64> {
    let scored: Vec<f64> = values.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(Error::SingleClass);
    }
    Ok(scored.iter().sum::<f64>() / scored.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralSection {
    pub feature_set: FeatureSet,
    pub n_trials: usize,
    pub auc: CvMetric,
    pub icc: f64,
    /// Mean |SHAP| per feature of the session-wide model.
    pub shap: Vec<NamedValue>,
    pub caveat: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCount {
    pub band: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralSection {
    pub target: TargetKind,
    pub n_trials: usize,
    /// Trials left out because their target was not finite.
    pub n_dropped: usize,
    pub bank_size: usize,
    pub r: CvMetric,
    pub selected_features: Vec<String>,
    pub band_counts: Vec<BandCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllabilitySection {
    pub n_trials: usize,
    pub auc: CvMetric,
    /// Cluster test of ON vs OFF spectra of the leading marker component.
    pub psd_clusters: Vec<Cluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub session_id: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavioral: Option<BehavioralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neural: Option<NeuralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controllability: Option<ControllabilitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

impl EvaluationReport {
    pub fn new(session_id: impl Into<String>, config: RunConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            session_id: session_id.into(),
            config,
            behavioral: None,
            neural: None,
            controllability: None,
            outcome: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "report".into(),
            source,
        })
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: context.into(),
            source,
        })?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::schema(
                context,
                format!("unsupported report schema version {}", report.schema_version),
            ));
        }
        Ok(report)
    }

    /// Fills sections missing here from `other` (same session only).
    pub fn merge(&mut self, other: EvaluationReport) -> Result<()> {
        if other.session_id != self.session_id {
            return Err(Error::invariant(
                "merged reports describe the same session",
                format!("{} vs {}", self.session_id, other.session_id),
            ));
        }
        self.behavioral = self.behavioral.take().or(other.behavioral);
        self.neural = self.neural.take().or(other.neural);
        self.controllability = self.controllability.take().or(other.controllability);
        self.outcome = self.outcome.take().or(other.outcome);
        Ok(())
    }
}
