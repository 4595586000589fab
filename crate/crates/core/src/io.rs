//! Session persistence.
//!
//! A session on disk is a JSON manifest plus one JSON file per trace and
//! one binary file per neural epoch, referenced by paths relative to the
//! manifest's directory:
//!
//! ```text
//! session.json             manifest, "schema_version": 1
//! traces/b000_t00.json     {"template": [[x, y], ...], "trial_duration_limit": s, "samples": [[t, x, y], ...]}
//! epochs/b000_t00.bin      32-byte header + f64 LE row-major channels x samples
//! ```
//!
//! The epoch header is `b"CDEPOCH\x01"`, `n_channels: u64 LE`,
//! `n_samples: u64 LE`, `sample_rate: f64 LE`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Block, DbsCondition, Exclusion, Modality, NeuralEpoch, PenSample, Point, Session, Trace, Trial};

pub const SCHEMA_VERSION: u32 = 1;
pub const EPOCH_MAGIC: [u8; 8] = *b"CDEPOCH\x01";
pub const EPOCH_HEADER_LEN: usize = 32;
pub const MANIFEST_FILE: &str = "session.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub id: String,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_names: Option<Vec<String>>,
    pub blocks: Vec<ManifestBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestBlock {
    pub index: usize,
    pub condition: DbsCondition,
    pub trials: Vec<ManifestTrial>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTrial {
    pub trace: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<PathBuf>,
    /// Optional per-trial label; must agree with the block condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<DbsCondition>,
    #[serde(default)]
    pub excluded: Exclusion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub template: Vec<Point>,
    pub trial_duration_limit: f64,
    pub samples: Vec<[f64; 3]>,
}

impl TraceFile {
    pub fn from_trace(trace: &Trace) -> Self {
        Self {
            template: trace.template().to_vec(),
            trial_duration_limit: trace.trial_duration_limit(),
            samples: trace.samples().iter().map(|s| [s.t, s.x, s.y]).collect(),
        }
    }

    pub fn into_trace(self) -> Result<Trace> {
        let samples = self.samples.into_iter().map(|[t, x, y]| PenSample::new(t, x, y)).collect();
        Trace::new(samples, self.template, self.trial_duration_limit)
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_epoch(epoch: &NeuralEpoch) -> Vec<u8> {
    let (n_ch, n_s) = epoch.data().shape();
    let mut out = Vec::with_capacity(EPOCH_HEADER_LEN + 8 * n_ch * n_s);
    out.extend_from_slice(&EPOCH_MAGIC);
    out.extend_from_slice(&(n_ch as u64).to_le_bytes());
    out.extend_from_slice(&(n_s as u64).to_le_bytes());
    out.extend_from_slice(&epoch.sample_rate().to_le_bytes());
    for c in 0..n_ch {
        for s in 0..n_s {
            out.extend_from_slice(&epoch.data()[(c, s)].to_le_bytes());
        }
    }
    out
}

/// Decodes an epoch file body. Returns the data matrix and sample rate.
pub fn decode_epoch(bytes: &[u8], context: &str) -> Result<(DMatrix<f64>, f64)> {
    if bytes.len() < EPOCH_HEADER_LEN {
        return Err(Error::schema(context, "epoch file shorter than its 32-byte header"));
    }
    if bytes[..8] != EPOCH_MAGIC {
        return Err(Error::schema(context, "bad epoch magic"));
    }
    let word = |i: usize| <[u8; 8]>::try_from(&bytes[i..i + 8]).expect("8-byte slice");
    let n_ch = u64::from_le_bytes(word(8)) as usize;
    let n_s = u64::from_le_bytes(word(16)) as usize;
    let sample_rate = f64::from_le_bytes(word(24));
    let expected = n_ch
        .checked_mul(n_s)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(EPOCH_HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::schema(
            context,
            format!("epoch header declares {n_ch}x{n_s} but file has {} bytes", bytes.len()),
        ));
    }
    let body = &bytes[EPOCH_HEADER_LEN..];
    let data = DMatrix::from_fn(n_ch, n_s, |c, s| {
        let off = 8 * (c * n_s + s);
        f64::from_le_bytes(body[off..off + 8].try_into().expect("8-byte slice"))
    });
    Ok((data, sample_rate))
}

/// Loads and validates a session from its manifest.
pub fn load_session(manifest_path: impl AsRef<Path>) -> Result<Session> {
    let manifest_path = manifest_path.as_ref();
    let manifest_path = if manifest_path.is_dir() {
        manifest_path.join(MANIFEST_FILE)
    } else {
        manifest_path.to_path_buf()
    };
    let root = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let manifest: Manifest = parse_json(&manifest_path, &read_bytes(&manifest_path)?)?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::schema(
            manifest_path.display().to_string(),
            format!("unsupported schema_version {}", manifest.schema_version),
        ));
    }

    let mut blocks = Vec::with_capacity(manifest.blocks.len());
    for mb in manifest.blocks {
        let mut trials = Vec::with_capacity(mb.trials.len());
        for (ti, mt) in mb.trials.into_iter().enumerate() {
            let location = format!("block {} trial {ti}", mb.index);
            if let Some(c) = mt.condition {
                if c != mb.condition {
                    return Err(Error::invariant(
                        format!("trial condition {c} matches block condition {}", mb.condition),
                        location,
                    ));
                }
            }
            let trace_path = root.join(&mt.trace);
            let trace_file: TraceFile = parse_json(&trace_path, &read_bytes(&trace_path)?)?;
            let trace = trace_file.into_trace().map_err(|e| relocate(e, &location))?;
            let neural = match mt.epoch {
                Some(rel) => {
                    let path = root.join(rel);
                    let (data, sample_rate) = decode_epoch(&read_bytes(&path)?, &path.display().to_string())?;
                    let names = mt
                        .channel_names
                        .or_else(|| manifest.channel_names.clone())
                        .unwrap_or_else(|| (0..data.nrows()).map(|c| format!("ch{c}")).collect());
                    Some(
                        NeuralEpoch::new(data, sample_rate, names, manifest.modality)
                            .map_err(|e| relocate(e, &location))?,
                    )
                }
                None => None,
            };
            trials.push(Trial {
                trace,
                neural,
                exclusion: mt.excluded,
            });
        }
        blocks.push(Block {
            index: mb.index,
            condition: mb.condition,
            trials,
        });
    }
    Session::new(manifest.id, manifest.modality, blocks)
}

fn relocate(e: Error, location: &str) -> Error {
    match e {
        Error::InvariantViolation { invariant, location: inner } => Error::InvariantViolation {
            invariant,
            location: format!("{location} ({inner})"),
        },
        Error::TooFewSamples { needed, got } => Error::invariant(format!("trace has >= {needed} samples (got {got})"), location),
        Error::TooFewPoints { needed, got } => Error::invariant(format!("template has >= {needed} points (got {got})"), location),
        other => other,
    }
}

/// Writes a session as `dir/session.json` plus trace and epoch files.
/// Returns the manifest path.
pub fn save_session(session: &Session, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let session_channels: Option<Vec<String>> = session
        .blocks()
        .iter()
        .flat_map(|b| &b.trials)
        .find_map(|t| t.neural.as_ref().map(|e| e.channel_names().to_vec()));

    let mut blocks = Vec::with_capacity(session.blocks().len());
    for (bi, block) in session.blocks().iter().enumerate() {
        let mut trials = Vec::with_capacity(block.trials.len());
        for (ti, trial) in block.trials.iter().enumerate() {
            let stem = format!("b{bi:03}_t{ti:02}");
            let trace_rel = PathBuf::from("traces").join(format!("{stem}.json"));
            let body = serde_json::to_vec(&TraceFile::from_trace(&trial.trace)).map_err(|e| Error::Json {
                context: trace_rel.display().to_string(),
                source: e,
            })?;
            write_bytes(&dir.join(&trace_rel), &body)?;
            let (epoch_rel, channel_names) = match &trial.neural {
                Some(epoch) => {
                    let rel = PathBuf::from("epochs").join(format!("{stem}.bin"));
                    write_bytes(&dir.join(&rel), &encode_epoch(epoch))?;
                    let own = epoch.channel_names().to_vec();
                    let names = (Some(&own) != session_channels.as_ref()).then_some(own);
                    (Some(rel), names)
                }
                None => (None, None),
            };
            trials.push(ManifestTrial {
                trace: trace_rel,
                epoch: epoch_rel,
                condition: None,
                excluded: trial.exclusion,
                channel_names,
            });
        }
        blocks.push(ManifestBlock {
            index: block.index,
            condition: block.condition,
            trials,
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        id: session.id().to_string(),
        modality: session.modality(),
        channel_names: session_channels,
        blocks,
    };
    let path = dir.join(MANIFEST_FILE);
    let body = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Json {
        context: MANIFEST_FILE.into(),
        source: e,
    })?;
    write_bytes(&path, &body)?;
    Ok(path)
}
