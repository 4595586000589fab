//! Kinematic feature extraction from copy-drawing traces.
//!
//! Derivatives use the three-point central difference for non-uniform
//! grids, which is exact for quadratics. Each differentiation drops one
//! sample at each end, so velocity, acceleration and jerk have
//! `n - 2`, `n - 4` and `n - 6` samples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dtw;
use crate::error::{Error, Result};
use crate::model::Trace;

/// Samples needed for at least one jerk value.
pub const MIN_DERIVATIVE_SAMPLES: usize = 7;

pub const N_ANGULAR_BINS: usize = 8;

/// Clip threshold in training standard deviations.
pub const CLIP_STDS: f64 = 3.0;

const STANDARD_NAMES: [&str; 9] = [
    "speed", "speed_x", "speed_y", "accel", "accel_x", "accel_y", "jerk", "jerk_x", "jerk_y",
];
const DTW_NAMES: [&str; 3] = ["dtw_cost", "dtw_mean_distance", "dtw_fraction_matched"];
const BIN_QUANTITIES: [&str; 3] = ["speed", "accel", "jerk"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    #[default]
    Standard,
    Extended,
    Angular,
}

impl FeatureSet {
    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Standard => 9,
            FeatureSet::Extended => 12,
            FeatureSet::Angular => 36,
        }
    }

    pub fn names(self) -> Vec<String> {
        let standard = STANDARD_NAMES.iter().map(|s| s.to_string());
        let extended = standard.chain(DTW_NAMES.iter().map(|s| s.to_string()));
        match self {
            FeatureSet::Standard => STANDARD_NAMES.iter().map(|s| s.to_string()).collect(),
            FeatureSet::Extended => extended.collect(),
            FeatureSet::Angular => (0..N_ANGULAR_BINS)
                .flat_map(|b| BIN_QUANTITIES.iter().map(move |q| format!("bin{b}_{q}")))
                .chain(extended)
                .collect(),
        }
    }

    pub fn extract(self, trace: &Trace) -> Result<FeatureVector> {
        match self {
            FeatureSet::Standard => standard_features(trace),
            FeatureSet::Extended => extended_features(trace),
            FeatureSet::Angular => angular_features(trace),
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "standard" => Ok(FeatureSet::Standard),
            "extended" => Ok(FeatureSet::Extended),
            "angular" => Ok(FeatureSet::Angular),
            other => Err(format!("unknown feature set '{other}' (standard|extended|angular)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub set: FeatureSet,
    pub values: Vec<f64>,
}

impl FeatureVector {
    fn new(set: FeatureSet, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), set.dim());
        Self { set, values }
    }

    pub fn names(&self) -> Vec<String> {
        self.set.names()
    }
}

/// A 2-D derivative sample at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector2 {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Vector2 {
    pub fn magnitude(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub velocity: Vec<Vector2>,
    pub acceleration: Vec<Vector2>,
    pub jerk: Vec<Vector2>,
}

/// Three-point derivative at interior nodes of a non-uniform grid.
fn central_difference(t: &[f64], f: &[f64]) -> Vec<f64> {
    t.windows(3)
        .zip(f.windows(3))
        .map(|(t, f)| {
            let h1 = t[1] - t[0];
            let h2 = t[2] - t[1];
            (h1 * h1 * f[2] - h2 * h2 * f[0] + (h2 * h2 - h1 * h1) * f[1]) / (h1 * h2 * (h1 + h2))
        })
        .collect()
}

fn differentiate(series: &[Vector2]) -> Vec<Vector2> {
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let x: Vec<f64> = series.iter().map(|s| s.x).collect();
    let y: Vec<f64> = series.iter().map(|s| s.y).collect();
    let dx = central_difference(&t, &x);
    let dy = central_difference(&t, &y);
    t[1..t.len() - 1]
        .iter()
        .zip(dx.into_iter().zip(dy))
        .map(|(&t, (x, y))| Vector2 { t, x, y })
        .collect()
}

pub fn derivatives(trace: &Trace) -> Result<Derivatives> {
    if trace.len() < MIN_DERIVATIVE_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_DERIVATIVE_SAMPLES,
            got: trace.len(),
        });
    }
    let position: Vec<Vector2> = trace
        .samples()
        .iter()
        .map(|s| Vector2 { t: s.t, x: s.x, y: s.y })
        .collect();
    let velocity = differentiate(&position);
    let acceleration = differentiate(&velocity);
    let jerk = differentiate(&acceleration);
    Ok(Derivatives {
        velocity,
        acceleration,
        jerk,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn magnitude_means(series: &[Vector2]) -> [f64; 3] {
    [
        mean(series.iter().map(Vector2::magnitude)),
        mean(series.iter().map(|v| v.x.abs())),
        mean(series.iter().map(|v| v.y.abs())),
    ]
}

fn standard_values(d: &Derivatives) -> Vec<f64> {
    [&d.velocity, &d.acceleration, &d.jerk]
        .into_iter()
        .flat_map(|s| magnitude_means(s))
        .collect()
}

pub fn standard_features(trace: &Trace) -> Result<FeatureVector> {
    let d = derivatives(trace)?;
    Ok(FeatureVector::new(FeatureSet::Standard, standard_values(&d)))
}

fn dtw_values(trace: &Trace) -> Result<[f64; 3]> {
    let alignment = dtw::align(&trace.points(), trace.template())?;
    let perf = dtw::TaskPerformance::from_alignment(&alignment, trace.template().len());
    Ok([alignment.total_cost, perf.mean_distance, perf.fraction_matched])
}

pub fn extended_features(trace: &Trace) -> Result<FeatureVector> {
    let mut values = standard_values(&derivatives(trace)?);
    values.extend(dtw_values(trace)?);
    Ok(FeatureVector::new(FeatureSet::Extended, values))
}

/// Direction bin of a velocity vector: 45° sectors counted
/// counter-clockwise from +x; an angle on a sector edge belongs to the
/// sector that starts there.
pub fn direction_bin(vx: f64, vy: f64) -> usize {
    let mut deg = vy.atan2(vx).to_degrees();
    if deg < 0.0 {
        deg += 360.0;
    }
    let bin = (deg / 45.0).floor() as usize;
    // -tiny + 360 rounds to 360, which still lies in the last sector
    bin.min(N_ANGULAR_BINS - 1)
}

pub fn angular_features(trace: &Trace) -> Result<FeatureVector> {
    let d = derivatives(trace)?;
    let bins: Vec<usize> = d.velocity.iter().map(|v| direction_bin(v.x, v.y)).collect();

    // velocity[k] sits on trace node k+1, acceleration[m] on m+2, jerk[q] on q+3;
    // each derivative sample takes the direction of the velocity on its node.
    let mut sums = [[0.0f64; 3]; N_ANGULAR_BINS];
    let mut counts = [[0usize; 3]; N_ANGULAR_BINS];
    for (quantity, (series, offset)) in [(&d.velocity, 0usize), (&d.acceleration, 1), (&d.jerk, 2)]
        .into_iter()
        .enumerate()
    {
        for (i, v) in series.iter().enumerate() {
            let bin = bins[i + offset];
            sums[bin][quantity] += v.magnitude();
            counts[bin][quantity] += 1;
        }
    }
    let mut values = Vec::with_capacity(FeatureSet::Angular.dim());
    for (s, c) in sums.iter().zip(&counts) {
        for q in 0..3 {
            values.push(if c[q] == 0 { 0.0 } else { s[q] / c[q] as f64 });
        }
    }
    values.extend(standard_values(&d));
    values.extend(dtw_values(trace)?);
    Ok(FeatureVector::new(FeatureSet::Angular, values))
}

/// Stacks feature vectors into an `n_trials x n_features` matrix.
pub fn feature_matrix(features: &[FeatureVector]) -> DMatrix<f64> {
    let p = features.first().map_or(0, |f| f.values.len());
    DMatrix::from_fn(features.len(), p, |r, c| features[r].values[c])
}

/// Per-feature clip-then-standardize transform fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    /// Training statistics use the population standard deviation.
    pub fn fit(train: &DMatrix<f64>) -> Result<Self> {
        let n = train.nrows();
        if n == 0 {
            return Err(Error::EmptyTraining);
        }
        let mut mean = Vec::with_capacity(train.ncols());
        let mut std = Vec::with_capacity(train.ncols());
        for col in train.column_iter() {
            let m = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            mean.push(m);
            std.push(var.sqrt());
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| {
            let (m, s) = (self.mean[c], self.std[c]);
            if s == 0.0 {
                return 0.0;
            }
            let clipped = x[(r, c)].clamp(m - CLIP_STDS * s, m + CLIP_STDS * s);
            ((clipped - m) / s).clamp(-CLIP_STDS, CLIP_STDS)
        }))
    }
}

/// Clips to mean ± 3 STD and z-scores both sets with training statistics.
pub fn preprocess_features(train: &DMatrix<f64>, apply_to: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let scaler = FeatureScaler::fit(train)?;
    Ok((scaler.transform(train)?, scaler.transform(apply_to)?))
}
