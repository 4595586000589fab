//! Domain types shared by every pipeline stage.
//!
//! Constructors validate their invariants, so a value of any of these
//! types that exists is a valid one. Sessions are immutable after
//! construction and can be shared read-only across worker threads.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D point in screen pixels.
pub type Point = [f64; 2];

/// Maximum number of valid trials per block.
pub const MAX_TRIALS_PER_BLOCK: usize = 12;

/// Minimum pen samples per trace.
pub const MIN_TRACE_SAMPLES: usize = 4;

/// Highest band edge used by the analysis filterbank, in Hz.
pub const HIGHEST_BAND_EDGE_HZ: f64 = 90.0;

pub const DEFAULT_SAMPLE_RATE: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenSample {
    /// Seconds since trial start.
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl PenSample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }

    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

/// One copy-drawn trial: the pen path and the template it copies.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<PenSample>,
    template: Vec<Point>,
    trial_duration_limit: f64,
}

impl Trace {
    /// Validates and normalizes a raw pen recording.
    ///
    /// Samples sharing a timestamp are collapsed to the last one; any
    /// remaining decrease in time is rejected.
    pub fn new(samples: Vec<PenSample>, template: Vec<Point>, trial_duration_limit: f64) -> Result<Self> {
        let mut deduped: Vec<PenSample> = Vec::with_capacity(samples.len());
        for (i, s) in samples.into_iter().enumerate() {
            if !(s.t.is_finite() && s.x.is_finite() && s.y.is_finite()) {
                return Err(Error::invariant("finite pen sample", format!("sample {i}")));
            }
            if s.t < 0.0 {
                return Err(Error::invariant("t >= 0", format!("sample {i}")));
            }
            match deduped.last_mut() {
                Some(prev) if prev.t == s.t => *prev = s,
                Some(prev) if prev.t > s.t => {
                    return Err(Error::invariant("monotone timestamps", format!("sample {i}")));
                }
                _ => deduped.push(s),
            }
        }
        if deduped.len() < MIN_TRACE_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: MIN_TRACE_SAMPLES,
                got: deduped.len(),
            });
        }
        if template.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: template.len(),
            });
        }
        if template.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invariant("finite template", "template"));
        }
        if !(trial_duration_limit.is_finite() && trial_duration_limit > 0.0) {
            return Err(Error::invariant("positive trial duration limit", "trace"));
        }
        Ok(Self {
            samples: deduped,
            template,
            trial_duration_limit,
        })
    }

    pub fn samples(&self) -> &[PenSample] {
        &self.samples
    }

    pub fn template(&self) -> &[Point] {
        &self.template
    }

    pub fn trial_duration_limit(&self) -> f64 {
        self.trial_duration_limit
    }

    pub fn points(&self) -> Vec<Point> {
        self.samples.iter().map(PenSample::point).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DbsCondition {
    #[serde(rename = "ON")]
    On,
    #[serde(rename = "OFF")]
    Off,
}

impl DbsCondition {
    pub fn is_on(self) -> bool {
        self == DbsCondition::On
    }

    pub fn flipped(self) -> Self {
        match self {
            DbsCondition::On => DbsCondition::Off,
            DbsCondition::Off => DbsCondition::On,
        }
    }
}

impl std::fmt::Display for DbsCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DbsCondition::On => "ON",
            DbsCondition::Off => "OFF",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    #[default]
    None,
    MarkerIssue,
    LabProtocol,
    Fragmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "EEG")]
    Eeg,
    #[serde(rename = "ECOG")]
    Ecog,
}

/// One epoch of multichannel neural data, channels × samples.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralEpoch {
    data: DMatrix<f64>,
    sample_rate: f64,
    channel_names: Vec<String>,
    modality: Modality,
}

impl NeuralEpoch {
    pub fn new(data: DMatrix<f64>, sample_rate: f64, channel_names: Vec<String>, modality: Modality) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::invariant("channels >= 1", "epoch"));
        }
        if channel_names.len() != data.nrows() {
            return Err(Error::invariant(
                format!("{} channel names for {} channels", channel_names.len(), data.nrows()),
                "epoch",
            ));
        }
        if !(sample_rate.is_finite() && sample_rate > 2.0 * HIGHEST_BAND_EDGE_HZ) {
            return Err(Error::invariant(
                format!("sample_rate {sample_rate} > {}", 2.0 * HIGHEST_BAND_EDGE_HZ),
                "epoch",
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("finite epoch values", "epoch"));
        }
        Ok(Self {
            data,
            sample_rate,
            channel_names,
            modality,
        })
    }

    /// Builds an epoch with generated channel names `ch0..chN`.
    pub fn from_data(data: DMatrix<f64>, sample_rate: f64, modality: Modality) -> Result<Self> {
        let names = (0..data.nrows()).map(|c| format!("ch{c}")).collect();
        Self::new(data, sample_rate, names, modality)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Same metadata, new data of identical shape (used by filters).
    pub(crate) fn with_data(&self, data: DMatrix<f64>) -> Self {
        debug_assert_eq!(data.shape(), self.data.shape());
        Self {
            data,
            sample_rate: self.sample_rate,
            channel_names: self.channel_names.clone(),
            modality: self.modality,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub trace: Trace,
    pub neural: Option<NeuralEpoch>,
    pub exclusion: Exclusion,
}

impl Trial {
    pub fn is_excluded(&self) -> bool {
        self.exclusion != Exclusion::None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub index: usize,
    pub condition: DbsCondition,
    pub trials: Vec<Trial>,
}

impl Block {
    pub fn n_included(&self) -> usize {
        self.trials.iter().filter(|t| !t.is_excluded()).count()
    }
}

/// A recorded session: ordered blocks of trials under alternating DBS.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    id: String,
    modality: Modality,
    blocks: Vec<Block>,
}

/// A non-excluded trial together with its position in the session.
#[derive(Debug, Clone, Copy)]
pub struct TrialRef<'a> {
    /// Position of the block in `Session::blocks`.
    pub block: usize,
    /// Position of the trial within its block.
    pub trial: usize,
    pub condition: DbsCondition,
    pub data: &'a Trial,
}

impl Session {
    pub fn new(id: impl Into<String>, modality: Modality, blocks: Vec<Block>) -> Result<Self> {
        let id = id.into();
        for pair in blocks.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(Error::invariant(
                    "block indices strictly increasing",
                    format!("block {}", pair[1].index),
                ));
            }
        }
        for b in &blocks {
            let included = b.n_included();
            if included > MAX_TRIALS_PER_BLOCK {
                return Err(Error::invariant(
                    format!("at most {MAX_TRIALS_PER_BLOCK} valid trials per block (found {included})"),
                    format!("block {}", b.index),
                ));
            }
            for (ti, trial) in b.trials.iter().enumerate() {
                if let Some(epoch) = &trial.neural {
                    if epoch.modality() != modality {
                        return Err(Error::invariant(
                            "epoch modality matches session modality",
                            format!("block {} trial {ti}", b.index),
                        ));
                    }
                }
            }
        }
        let has_on = blocks.iter().any(|b| b.condition.is_on());
        let has_off = blocks.iter().any(|b| !b.condition.is_on());
        if !(has_on && has_off) {
            return Err(Error::invariant("at least one ON and one OFF block", format!("session {id}")));
        }
        Ok(Self { id, modality, blocks })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// All non-excluded trials in chronological order.
    pub fn included_trials(&self) -> Vec<TrialRef<'_>> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(bi, b)| {
                b.trials
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| !t.is_excluded())
                    .map(move |(ti, t)| TrialRef {
                        block: bi,
                        trial: ti,
                        condition: b.condition,
                        data: t,
                    })
            })
            .collect()
    }

    /// Copy of the session with the block conditions replaced.
    pub fn with_conditions(&self, conditions: &[DbsCondition]) -> Result<Self> {
        if conditions.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                got: conditions.len(),
            });
        }
        let blocks = self
            .blocks
            .iter()
            .zip(conditions)
            .map(|(b, &c)| Block {
                condition: c,
                ..b.clone()
            })
            .collect();
        Session::new(self.id.clone(), self.modality, blocks)
    }
}
