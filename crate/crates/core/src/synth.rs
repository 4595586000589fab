//! Synthetic sessions with known ground truth.
//!
//! Traces come from a walker that follows a three-atom template at a
//! per-trial speed `s0·exp(drive)`, where `drive = ln(speed_shift)·1[ON] +
//! κ·ξ` and `ξ ~ U(-1, 1)`, displaced by a smoothed Ornstein-Uhlenbeck
//! wobble. Epochs mix band-limited sources whose per-trial variance is
//! `g·(1 + γ_beh·z + γ_dbs·1[ON])`, with `z` the drive rescaled to
//! [-1, 1], plus spatially white noise at the requested SNR.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::derive_seed;
use crate::model::{
    Block, DbsCondition, Exclusion, Modality, NeuralEpoch, PenSample, Point, Session, Trace, Trial,
    MAX_TRIALS_PER_BLOCK,
};
use crate::spoc::filter::Bandpass;
use crate::spoc::{canonical_bands, FrequencyBand};

pub const TABLET_RATE: f64 = 120.0;
pub const TIMESTAMP_JITTER: f64 = 0.001;
pub const TEMPLATE_POINTS_PER_ATOM: usize = 40;
pub const BRUTE_FORCE_LIMIT: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicSpec {
    /// Walker speed multiplier under ON (1 = no effect).
    pub speed_shift: f64,
    /// Wobble time-constant multiplier under ON (1 = no effect).
    pub smoothing_shift: f64,
    /// Within-condition behavioral spread κ of the log speed.
    pub behavior_spread: f64,
    /// Baseline walker speed, pixels per second.
    pub base_speed: f64,
    /// Wobble amplitude (pixels) and time constant (seconds).
    pub wobble: f64,
    pub wobble_tau: f64,
    pub trial_duration_limit: f64,
}

impl Default for KinematicSpec {
    fn default() -> Self {
        Self {
            speed_shift: 1.5,
            smoothing_shift: 1.0,
            behavior_spread: 0.15,
            base_speed: 120.0,
            wobble: 3.0,
            wobble_tau: 0.15,
            trial_duration_limit: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    /// Name of a canonical band.
    pub band: String,
    pub gain: f64,
    pub gamma_beh: f64,
    pub gamma_dbs: f64,
    /// Mixing column; drawn at random (unit norm) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<Vec<f64>>,
}

impl SourceSpec {
    pub fn planted(band: &str, gamma_beh: f64, gamma_dbs: f64) -> Self {
        Self {
            band: band.into(),
            gain: 1.0,
            gamma_beh,
            gamma_dbs,
            mixing: None,
        }
    }

    pub fn background(band: &str) -> Self {
        Self::planted(band, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralSpec {
    pub modality: Modality,
    pub n_channels: usize,
    pub sample_rate: f64,
    pub n_samples: usize,
    /// Mean per-channel source power over white-noise power.
    pub snr: f64,
    pub sources: Vec<SourceSpec>,
}

impl Default for NeuralSpec {
    fn default() -> Self {
        Self {
            modality: Modality::Eeg,
            n_channels: 8,
            sample_rate: 300.0,
            n_samples: 600,
            snr: 3.0,
            sources: vec![
                SourceSpec::planted("beta", 0.8, 0.0),
                SourceSpec::background("alpha"),
                SourceSpec::background("beta"),
            ],
        }
    }
}

impl NeuralSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return bad(format!("snr must be positive, got {}", self.snr));
        }
        if self.n_channels == 0 || self.n_samples < 2 {
            return bad("need at least one channel and two samples".into());
        }
        let bands = canonical_bands();
        for s in &self.sources {
            let Some(band) = bands.iter().find(|b| b.name == s.band) else {
                return bad(format!("unknown band '{}'", s.band));
            };
            if !band.fits(self.sample_rate) {
                return bad(format!("band {} beyond Nyquist at {} Hz", s.band, self.sample_rate));
            }
            if !(s.gain > 0.0) {
                return bad(format!("source gain must be positive, got {}", s.gain));
            }
            if 1.0 - s.gamma_beh.abs() + s.gamma_dbs.min(0.0) <= 0.0 {
                return bad(format!(
                    "source variance 1 + {}·z + {}·ON can reach zero",
                    s.gamma_beh, s.gamma_dbs
                ));
            }
            if let Some(m) = &s.mixing {
                if m.len() != self.n_channels || m.iter().all(|v| *v == 0.0) {
                    return bad("mixing column must be non-zero with one entry per channel".into());
                }
            }
        }
        Ok(())
    }

    fn total_gain(&self) -> f64 {
        self.sources.iter().map(|s| s.gain).sum()
    }

    /// White-noise variance giving the requested mean per-channel SNR
    /// with unit-norm mixing columns; pure noise has unit variance.
    pub fn noise_variance(&self) -> f64 {
        if self.sources.is_empty() {
            1.0
        } else {
            self.total_gain() / (self.n_channels as f64 * self.snr)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub id: String,
    pub n_blocks: usize,
    pub trials_per_block: usize,
    pub first_condition: DbsCondition,
    pub kinematics: KinematicSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neural: Option<NeuralSpec>,
    pub seed: u64,
}

impl SynthSpec {
    /// Planted kinematic shift ×1.5 and one β source comodulating with
    /// behavior, 8 channels at SNR 3.
    pub fn planted(seed: u64) -> Self {
        Self {
            id: format!("synth-{seed}"),
            n_blocks: 12,
            trials_per_block: MAX_TRIALS_PER_BLOCK,
            first_condition: DbsCondition::Off,
            kinematics: KinematicSpec::default(),
            neural: Some(NeuralSpec::default()),
            seed,
        }
    }

    /// No kinematic effect of condition and no neural modulation.
    pub fn null(seed: u64) -> Self {
        let mut spec = Self::planted(seed);
        spec.kinematics.speed_shift = 1.0;
        if let Some(n) = spec.neural.as_mut() {
            for s in &mut n.sources {
                s.gamma_beh = 0.0;
                s.gamma_dbs = 0.0;
            }
        }
        spec
    }

    /// Planted behavior, but epochs are spatially white noise only.
    pub fn white_noise(seed: u64) -> Self {
        let mut spec = Self::planted(seed);
        if let Some(n) = spec.neural.as_mut() {
            n.sources.clear();
        }
        spec
    }

    /// Behavior varies within conditions only; the planted source follows
    /// behavior, so it is unrelated to the DBS condition.
    pub fn non_controllable(seed: u64) -> Self {
        let mut spec = Self::planted(seed);
        spec.kinematics.speed_shift = 1.0;
        spec
    }

    /// Source power follows the DBS condition only.
    pub fn dbs_modulated(seed: u64) -> Self {
        let mut spec = Self::planted(seed);
        if let Some(n) = spec.neural.as_mut() {
            n.sources[0].gamma_beh = 0.0;
            n.sources[0].gamma_dbs = 0.8;
        }
        spec
    }

    /// Four-channel ECoG strip with a β source following behavior.
    pub fn ecog(seed: u64) -> Self {
        let mut spec = Self::planted(seed);
        spec.neural = Some(NeuralSpec {
            modality: Modality::Ecog,
            n_channels: 4,
            sources: vec![SourceSpec::planted("beta", 0.8, 0.0), SourceSpec::background("alpha")],
            ..NeuralSpec::default()
        });
        spec
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        Ok(match name {
            "default" | "planted" => Self::planted(seed),
            "null" => Self::null(seed),
            "white-noise" => Self::white_noise(seed),
            "non-controllable" => Self::non_controllable(seed),
            "dbs-modulated" => Self::dbs_modulated(seed),
            "ecog" => Self::ecog(seed),
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown preset '{other}' (default|null|white-noise|non-controllable|dbs-modulated|ecog)"
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.n_blocks < 2 {
            return bad("need at least two blocks");
        }
        if self.trials_per_block == 0 || self.trials_per_block > MAX_TRIALS_PER_BLOCK {
            return bad("trials per block must be within 1..=12");
        }
        let k = &self.kinematics;
        let positive = [k.speed_shift, k.smoothing_shift, k.base_speed, k.wobble_tau, k.trial_duration_limit];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("speed, smoothing, wobble time constant and duration limit must be positive");
        }
        if !(k.behavior_spread >= 0.0) || !(k.wobble >= 0.0) {
            return bad("behavior spread and wobble must be non-negative");
        }
        if let Some(n) = &self.neural {
            n.validate()?;
        }
        Ok(())
    }
}

/// What the generator planted, per included trial in session order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub conditions: Vec<DbsCondition>,
    /// Within-condition behavioral latent ξ.
    pub latent: Vec<f64>,
    /// Log speed offset of each trial.
    pub drive: Vec<f64>,
    /// Drive rescaled to [-1, 1]; 0 everywhere when it is constant.
    pub z: Vec<f64>,
    /// Mixing column of every source, in spec order.
    pub mixing: Vec<Vec<f64>>,
}

/// Template of three pseudo-letter atoms drawn from a fixed pool.
pub fn make_template(rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = TEMPLATE_POINTS_PER_ATOM;
    let atoms: [fn(f64) -> Point; 4] = [
        |u| [60.0 * (1.0 - (PI * u).cos()), 60.0 * (PI * u).sin()],
        |u| [120.0 * u + 25.0 * (2.0 * PI * u).sin(), 45.0 * (1.0 - (2.0 * PI * u).cos())],
        |u| [120.0 * u, 40.0 * (3.0 * PI * u).sin()],
        |u| [100.0 * u, 80.0 * u * u - 30.0 * u],
    ];
    let mut out: Vec<Point> = Vec::with_capacity(3 * n);
    let mut origin = [0.0, 0.0];
    for _ in 0..3 {
        let atom = atoms[rng.random_range(0..atoms.len())];
        let start = atom(0.0);
        for i in 0..n {
            let p = atom(i as f64 / (n - 1) as f64);
            let q = [origin[0] + p[0] - start[0], origin[1] + p[1] - start[1]];
            if i > 0 || out.is_empty() {
                out.push(q);
            } else {
                // the joint point is shared with the previous atom
                out.push([q[0] + 1.0, q[1]]);
            }
        }
        origin = *out.last().unwrap();
    }
    out
}

fn cumulative_length(template: &[Point]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for w in template.windows(2) {
        let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        acc.push(acc.last().unwrap() + d);
    }
    acc
}

fn point_at(template: &[Point], cum: &[f64], s: f64) -> Point {
    let k = cum.partition_point(|&c| c <= s).clamp(1, template.len() - 1);
    let (a, b) = (template[k - 1], template[k]);
    let seg = cum[k] - cum[k - 1];
    let f = if seg > 0.0 { ((s - cum[k - 1]) / seg).clamp(0.0, 1.0) } else { 0.0 };
    [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Walks the template at `speed` px/s with a two-stage OU wobble of
/// stationary amplitude `wobble` and time constant `tau`.
pub fn walk_template(
    template: &[Point],
    speed: f64,
    wobble: f64,
    tau: f64,
    limit: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Trace> {
    let cum = cumulative_length(template);
    let total = *cum.last().unwrap();
    let dt = 1.0 / TABLET_RATE;
    let mut samples = Vec::new();
    let (mut u, mut p) = ([0.0f64; 2], [0.0f64; 2]);
    let mut k = 0usize;
    loop {
        let nominal = k as f64 * dt;
        if nominal > limit {
            break;
        }
        let t = if k == 0 {
            0.0
        } else {
            nominal + rng.random_range(-TIMESTAMP_JITTER..TIMESTAMP_JITTER)
        };
        let s = (speed * t).min(total);
        let c = point_at(template, &cum, s);
        samples.push(PenSample::new(t, c[0] + p[0], c[1] + p[1]));
        if s >= total {
            break;
        }
        // Euler steps of u' = -u/τ + noise, p' = (u - p)/τ
        let a = dt / tau;
        let kick = wobble * (2.0 * a).sqrt();
        for d in 0..2 {
            u[d] += -a * u[d] + kick * gaussian(rng);
            p[d] += a * (u[d] - p[d]);
        }
        k += 1;
    }
    Trace::new(samples, template.to_vec(), limit)
}

fn unit_column(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..p).map(|_| gaussian(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Per-source filters and mixing columns of a neural spec.
#[derive(Debug, Clone)]
pub struct SourceBank {
    spec: NeuralSpec,
    filters: Vec<Bandpass>,
    /// Scale that brings filtered unit white noise back to unit variance.
    norms: Vec<f64>,
    pub mixing: Vec<Vec<f64>>,
}

impl SourceBank {
    pub fn new(spec: &NeuralSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let bands = canonical_bands();
        let mut filters = Vec::new();
        let mut norms = Vec::new();
        let mut mixing = Vec::new();
        for s in &spec.sources {
            let band: &FrequencyBand = bands.iter().find(|b| b.name == s.band).expect("validated");
            let f = Bandpass::design(band, spec.sample_rate)?;
            norms.push(1.0 / f.filtfilt_noise_gain(spec.n_samples).sqrt());
            filters.push(f);
            mixing.push(match &s.mixing {
                Some(m) => {
                    let n = m.iter().map(|x| x * x).sum::<f64>().sqrt();
                    m.iter().map(|x| x / n).collect()
                }
                None => unit_column(rng, spec.n_channels),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            filters,
            norms,
            mixing,
        })
    }

    /// Source part and noise part of one epoch, separately.
    fn parts(&self, z: f64, on: bool, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
        let (p, n) = (self.spec.n_channels, self.spec.n_samples);
        let mut signal = DMatrix::zeros(p, n);
        for (k, s) in self.spec.sources.iter().enumerate() {
            let white: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
            let band_limited = self.filters[k].filtfilt(&white);
            let var = s.gain * (1.0 + s.gamma_beh * z + s.gamma_dbs * f64::from(u8::from(on)));
            let scale = var.sqrt() * self.norms[k];
            for (c, m) in self.mixing[k].iter().enumerate() {
                for (t, v) in band_limited.iter().enumerate() {
                    signal[(c, t)] += m * scale * v;
                }
            }
        }
        let sd = self.spec.noise_variance().sqrt();
        let noise = DMatrix::from_fn(p, n, |_, _| sd * gaussian(rng));
        (signal, noise)
    }

    pub fn epoch(&self, z: f64, on: bool, rng: &mut ChaCha8Rng) -> Result<NeuralEpoch> {
        let (signal, noise) = self.parts(z, on, rng);
        let prefix = match self.spec.modality {
            Modality::Eeg => "eeg",
            Modality::Ecog => "ecog",
        };
        let names = (1..=self.spec.n_channels).map(|c| format!("{prefix}{c:02}")).collect();
        NeuralEpoch::new(signal + noise, self.spec.sample_rate, names, self.spec.modality)
    }
}

/// Rescales to [-1, 1]; constant input maps to zeros.
fn to_unit_range(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| 2.0 * (x - lo) / (hi - lo) - 1.0).collect()
}

pub fn generate_session(spec: &SynthSpec) -> Result<(Session, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 0x5e55));
    let template = make_template(&mut rng);
    let k = &spec.kinematics;

    let mut conditions = Vec::new();
    let mut block_conditions = Vec::new();
    let mut condition = spec.first_condition;
    for _ in 0..spec.n_blocks {
        block_conditions.push(condition);
        conditions.extend(std::iter::repeat_n(condition, spec.trials_per_block));
        condition = condition.flipped();
    }
    let latent: Vec<f64> = conditions.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let drive: Vec<f64> = conditions
        .iter()
        .zip(&latent)
        .map(|(c, xi)| if c.is_on() { k.speed_shift.ln() } else { 0.0 } + k.behavior_spread * xi)
        .collect();
    let z = to_unit_range(&drive);

    let bank = spec
        .neural
        .as_ref()
        .map(|n| SourceBank::new(n, &mut rng))
        .transpose()?;

    let mut blocks = Vec::with_capacity(spec.n_blocks);
    for (b, &cond) in block_conditions.iter().enumerate() {
        let mut trials = Vec::with_capacity(spec.trials_per_block);
        for t in 0..spec.trials_per_block {
            let i = b * spec.trials_per_block + t;
            // one stream per trial keeps trials independent of each other's length
            let mut trial_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 1 + i as u64));
            let tau = k.wobble_tau * if cond.is_on() { k.smoothing_shift } else { 1.0 };
            let trace = walk_template(
                &template,
                k.base_speed * drive[i].exp(),
                k.wobble,
                tau,
                k.trial_duration_limit,
                &mut trial_rng,
            )?;
            let neural = bank
                .as_ref()
                .map(|bank| bank.epoch(z[i], cond.is_on(), &mut trial_rng))
                .transpose()?;
            trials.push(Trial {
                trace,
                neural,
                exclusion: Exclusion::None,
            });
        }
        blocks.push(Block {
            index: b + 1,
            condition: cond,
            trials,
        });
    }
    let modality = spec.neural.as_ref().map_or(Modality::Eeg, |n| n.modality);
    let session = Session::new(spec.id.clone(), modality, blocks)?;
    let truth = GroundTruth {
        spec: spec.clone(),
        conditions,
        latent,
        drive,
        z,
        mixing: bank.map(|b| b.mixing).unwrap_or_default(),
    };
    Ok((session, truth))
}

/// Stand-alone epochs with `z ~ U(-1, 1)` and every trial OFF, for testing
/// spatial filters directly.
pub fn planted_epochs(spec: &NeuralSpec, n_epochs: usize, seed: u64) -> Result<(Vec<NeuralEpoch>, Vec<f64>, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xe70c));
    let bank = SourceBank::new(spec, &mut rng)?;
    let z: Vec<f64> = (0..n_epochs).map(|_| rng.random_range(-1.0..1.0)).collect();
    let epochs = z.iter().map(|&zi| bank.epoch(zi, false, &mut rng)).collect::<Result<Vec<_>>>()?;
    Ok((epochs, z, bank.mixing))
}

/// Result of exhaustive open-end alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceAlignment {
    pub path: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub n_c: usize,
}

/// Minimum over every monotone step path from (0, 0) to (n_a - 1, j), any
/// j; costs summed from the start; ties favour the larger end column.
pub fn brute_force_dtw(a: &[Point], b: &[Point]) -> Result<BruteForceAlignment> {
    for len in [a.len(), b.len()] {
        if len > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge {
                limit: BRUTE_FORCE_LIMIT,
                got: len,
            });
        }
        if len == 0 {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
    }
    let local = |i: usize, j: usize| (a[i][0] - b[j][0]).hypot(a[i][1] - b[j][1]);
    let mut best: Option<BruteForceAlignment> = None;
    let mut path = vec![(0usize, 0usize)];

    fn visit(
        a_len: usize,
        b_len: usize,
        path: &mut Vec<(usize, usize)>,
        local: &dyn Fn(usize, usize) -> f64,
        best: &mut Option<BruteForceAlignment>,
    ) {
        let (i, j) = *path.last().unwrap();
        if i == a_len - 1 {
            let cost = path.iter().fold(0.0, |acc, &(p, q)| acc + local(p, q));
            let better = match best {
                None => true,
                Some(b) => cost < b.total_cost || (cost == b.total_cost && j + 1 > b.n_c),
            };
            if better {
                *best = Some(BruteForceAlignment {
                    path: path.clone(),
                    total_cost: cost,
                    n_c: j + 1,
                });
            }
        }
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < a_len && nj < b_len {
                path.push((ni, nj));
                visit(a_len, b_len, path, local, best);
                path.pop();
            }
        }
    }
    visit(a.len(), b.len(), &mut path, &local, &mut best);
    Ok(best.expect("at least one path exists"))
}
