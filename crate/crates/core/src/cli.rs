//! The `copydraw` command line.
//!
//! Every decoding subcommand writes (or updates) `<out>/<session>-report.json`
//! plus CSV projections for plotting, and a `.meta.json` sidecar with the
//! wall-clock details that must stay out of the report.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::dtw::task_performance;
use crate::error::{Error, Result};
use crate::evaluation::{
    behavioral_chance, behavioral_decode, chrono_folds, classify_outcome, cluster_permutation_test, controllability,
    controllability_chance, copydraw_scores, neural_chance, neural_decode, source_spectra, BehavioralSection,
    ControllabilitySection, EvaluationReport, FittedMarker, NeuralConfig, NeuralSection, RunConfig, TargetKind,
    DEFAULT_ICC_THRESHOLD, DEFAULT_N_PERM,
};
use crate::io::{load_session, MANIFEST_FILE};
use crate::kinematics::FeatureSet;
use crate::linmodels::ols_fit;
use crate::model::Session;
use crate::synth::{generate_session, SynthSpec};

pub const OUTPUT_ENV: &str = "COPYDRAW_OUT";

/// Spectra of the marker source: cluster-forming and reporting levels.
const CLUSTER_ALPHA: f64 = 0.05;
const REPORT_ALPHA: f64 = 0.01;
const SPECTRUM_MAX_FREQ: f64 = 45.0;

const BEHAVIORAL_CAVEAT: &str = "CopyDraw scores are decision values of an LDA fit on all trials of the session; \
the ICC and SHAP values describe that in-sample model, the AUC is cross-validated";

#[derive(Debug, Parser)]
#[command(name = "copydraw", version, about = "Behavioral and neural marker decoding for adaptive DBS")]
pub struct Cli {
    /// Worker threads for permutations and feature extraction (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic session (manifest, traces, epochs) and its ground truth.
    Simulate(SimulateArgs),
    /// Decode the DBS condition from drawing kinematics.
    BehavioralDecode(BehavioralArgs),
    /// Regress a behavioral target on filterbank neural features.
    NeuralDecode(NeuralArgs),
    /// Decode the DBS condition from a frozen neural marker.
    Controllability(ControllabilityArgs),
    /// Classify a session from its behavioral and neural results.
    OutcomeType(OutcomeArgs),
    /// Cross-session tables from several session reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory (default: current directory).
    #[arg(short, long, env = OUTPUT_ENV)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_N_PERM)]
    pub n_perm: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preset name (default, null, white-noise, non-controllable,
    /// dbs-modulated, ecog) or a JSON spec file.
    #[arg(long, default_value = "default")]
    pub spec: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Session directory to create.
    #[arg(short, long, env = OUTPUT_ENV)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BehavioralArgs {
    /// Session directory or manifest file.
    pub session: PathBuf,
    #[arg(long, default_value = "standard")]
    pub feature_set: FeatureSet,
    /// Also write the feature matrix as CSV.
    #[arg(long)]
    pub dump_features: bool,
    #[arg(long, default_value_t = DEFAULT_ICC_THRESHOLD)]
    pub icc_threshold: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Copydraw,
    TaskPerformance,
}

#[derive(Debug, Args)]
pub struct NeuralArgs {
    pub session: PathBuf,
    #[arg(long, value_enum, default_value = "copydraw")]
    pub target: TargetArg,
    /// Kinematic feature set behind the CopyDraw target.
    #[arg(long, default_value = "standard")]
    pub feature_set: FeatureSet,
    #[arg(long, default_value_t = 8)]
    pub k_spoc: usize,
    #[arg(long, default_value_t = 8)]
    pub k_select: usize,
    #[arg(long, default_value_t = crate::linmodels::DEFAULT_RIDGE_ALPHA)]
    pub ridge_alpha: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ControllabilityArgs {
    pub session: PathBuf,
    /// Marker JSON written by `neural-decode` [default: <out>/<session>-marker.json].
    #[arg(long)]
    pub marker: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct OutcomeArgs {
    /// Report files of one session; their sections are merged.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ICC_THRESHOLD)]
    pub icc_threshold: f64,
    #[arg(short, long, env = OUTPUT_ENV)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(short, long, env = OUTPUT_ENV)]
    pub output: Option<PathBuf>,
}

/// Runs the CLI and returns the process exit code: 0 on success, 2 for
/// usage and validation errors, 1 for failed computations.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.workers {
        Some(0) => Err(Error::InvalidSpec("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?
            .install(|| dispatch(cli.command, n)),
        None => dispatch(cli.command, rayon::current_num_threads()),
    }
}

fn dispatch(command: Command, workers: usize) -> Result<()> {
    let started = Instant::now();
    let (name, out, id) = match command {
        Command::Simulate(a) => ("simulate", simulate(&a)?, None),
        Command::BehavioralDecode(a) => {
            let (out, id) = behavioral(&a)?;
            ("behavioral-decode", out, Some(id))
        }
        Command::NeuralDecode(a) => {
            let (out, id) = neural(&a)?;
            ("neural-decode", out, Some(id))
        }
        Command::Controllability(a) => {
            let (out, id) = controllability_cmd(&a)?;
            ("controllability", out, Some(id))
        }
        Command::OutcomeType(a) => {
            let (out, id) = outcome(&a)?;
            ("outcome-type", out, Some(id))
        }
        Command::Report(a) => ("report", report(&a)?, None),
    };
    let stem = id.map_or_else(|| name.to_string(), |id| format!("{id}-{name}"));
    write_meta(&out.join(format!("{stem}.meta.json")), name, workers, started)
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    workers: usize,
    finished_unix_seconds: u64,
    elapsed_seconds: f64,
}

fn write_meta(path: &Path, command: &str, workers: usize, started: Instant) -> Result<()> {
    let meta = Meta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        workers,
        finished_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(path, &meta)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn output_dir(output: &Option<PathBuf>) -> PathBuf {
    output.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn open_session(path: &Path) -> Result<Session> {
    if path.is_dir() {
        load_session(path.join(MANIFEST_FILE))
    } else {
        load_session(path)
    }
}

fn report_path(out: &Path, id: &str) -> PathBuf {
    out.join(format!("{id}-report.json"))
}

fn read_report(path: &Path) -> Result<EvaluationReport> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    EvaluationReport::from_json(&text, &path.display().to_string())
}

/// The session's existing report if it was produced under the same
/// configuration, otherwise a fresh one.
fn session_report(out: &Path, id: &str, config: RunConfig) -> Result<EvaluationReport> {
    let path = report_path(out, id);
    if path.exists() {
        let existing = read_report(&path)?;
        if existing.config == config && existing.session_id == id {
            return Ok(existing);
        }
        eprintln!("note: {} was written under another configuration; starting afresh", path.display());
    }
    Ok(EvaluationReport::new(id, config))
}

fn save_report(out: &Path, report: &EvaluationReport) -> Result<()> {
    let path = report_path(out, &report.session_id);
    write_text(&path, &report.to_json()?)?;
    println!("{}", path.display());
    Ok(())
}

fn run_config(session: &Path, common: &Common) -> RunConfig {
    RunConfig {
        sessions: vec![session.to_path_buf()],
        n_perm: common.n_perm,
        seed: common.seed,
        output: output_dir(&common.output),
        ..RunConfig::default()
    }
}

fn simulate(args: &SimulateArgs) -> Result<PathBuf> {
    let spec = if Path::new(&args.spec).is_file() {
        let text = fs::read_to_string(&args.spec).map_err(|e| Error::io(&args.spec, e))?;
        let mut spec: SynthSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: args.spec.clone(),
            source,
        })?;
        spec.seed = args.seed;
        spec
    } else {
        SynthSpec::preset(&args.spec, args.seed)?
    };
    let (session, truth) = generate_session(&spec)?;
    let manifest = crate::io::save_session(&session, &args.output)?;
    write_json(&args.output.join("ground_truth.json"), &truth)?;
    println!("{}", manifest.display());
    Ok(args.output.clone())
}

fn condition_name(on: bool) -> String {
    if on { "ON" } else { "OFF" }.to_string()
}

fn behavioral(args: &BehavioralArgs) -> Result<(PathBuf, String)> {
    let session = open_session(&args.session)?;
    let out = output_dir(&args.common.output);
    let config = RunConfig {
        feature_set: args.feature_set,
        icc_threshold: args.icc_threshold,
        ..run_config(&args.session, &args.common)
    };
    let (data, result) = behavioral_decode(&session, args.feature_set)?;
    let folds = chrono_folds(&session)?;
    let chance = behavioral_chance(&data, &folds, args.common.n_perm, args.common.seed)?;
    let id = session.id().to_string();

    let mut report = session_report(&out, &id, config)?;
    report.behavioral = Some(BehavioralSection {
        feature_set: args.feature_set,
        n_trials: data.len(),
        auc: result.auc.clone().with_chance(&chance),
        icc: result.icc,
        shap: result.shap.clone(),
        caveat: BEHAVIORAL_CAVEAT.into(),
    });
    report.outcome = None;
    save_report(&out, &report)?;

    let keys = &data.trials;
    write_csv(
        &out.join(format!("{id}-copydraw-scores.csv")),
        &["block".into(), "trial".into(), "condition".into(), "score".into()],
        keys.iter().zip(&result.scores).map(|(k, s)| {
            vec![k.block_index.to_string(), k.trial.to_string(), condition_name(k.condition.is_on()), s.to_string()]
        }),
    )?;
    if args.dump_features {
        let mut header: Vec<String> = vec!["block".into(), "trial".into(), "condition".into()];
        header.extend(data.names.iter().cloned());
        write_csv(
            &out.join(format!("{id}-features.csv")),
            &header,
            keys.iter().enumerate().map(|(r, k)| {
                let mut row = vec![k.block_index.to_string(), k.trial.to_string(), condition_name(k.condition.is_on())];
                row.extend(data.features.row(r).iter().map(|v| v.to_string()));
                row
            }),
        )?;
    }
    Ok((out, id))
}

/// Per-trial DTW task performance; perfect copies become NaN and are
/// dropped from the regression.
fn task_performance_targets(session: &Session) -> Result<Vec<f64>> {
    session
        .included_trials()
        .iter()
        .map(|t| Ok(task_performance(&t.data.trace)?.finite_value().unwrap_or(f64::NAN)))
        .collect()
}

fn neural(args: &NeuralArgs) -> Result<(PathBuf, String)> {
    let session = open_session(&args.session)?;
    let out = output_dir(&args.common.output);
    let base = RunConfig::default();
    let config = RunConfig {
        feature_set: args.feature_set,
        k_spoc: args.k_spoc,
        k_select: args.k_select,
        ridge_alpha: args.ridge_alpha,
        ..run_config(&args.session, &args.common)
    };
    let cfg = NeuralConfig {
        bands: base.bands,
        k_spoc: args.k_spoc,
        k_select: args.k_select,
        ridge_alpha: args.ridge_alpha,
    };
    let (kind, targets) = match args.target {
        TargetArg::Copydraw => (TargetKind::Copydraw, copydraw_scores(&session, args.feature_set)?),
        TargetArg::TaskPerformance => (TargetKind::TaskPerformance, task_performance_targets(&session)?),
    };
    let (data, cv, result) = neural_decode(&session, &targets, kind, &cfg)?;
    let chance = neural_chance(&data, &cv, args.common.n_perm, args.common.seed)?;
    let id = session.id().to_string();

    let mut report = session_report(&out, &id, config)?;
    report.neural = Some(NeuralSection {
        target: kind,
        n_trials: data.len(),
        n_dropped: data.n_dropped,
        bank_size: data.bank_size(),
        r: result.r.clone().with_chance(&chance),
        selected_features: result.marker.selected_names(),
        band_counts: result.marker.band_counts(),
    });
    report.outcome = None;
    save_report(&out, &report)?;

    write_text(&out.join(format!("{id}-marker.json")), &result.marker.to_json()?)?;
    write_csv(
        &out.join(format!("{id}-neural-predictions.csv")),
        &["trial", "block", "condition", "true_score", "predicted_score"].map(String::from),
        data.trials.iter().enumerate().map(|(r, k)| {
            vec![
                k.trial.to_string(),
                k.block_index.to_string(),
                condition_name(k.condition.is_on()),
                data.targets[r].to_string(),
                result.predictions[r].map_or_else(String::new, |p| p.to_string()),
            ]
        }),
    )?;
    write_csv(
        &out.join(format!("{id}-band-counts.csv")),
        &["band".into(), "count".into()],
        result.marker.band_counts().into_iter().map(|b| vec![b.band, b.count.to_string()]),
    )?;
    Ok((out, id))
}

fn controllability_cmd(args: &ControllabilityArgs) -> Result<(PathBuf, String)> {
    let session = open_session(&args.session)?;
    let out = output_dir(&args.common.output);
    let id = session.id().to_string();
    let marker_path = args.marker.clone().unwrap_or_else(|| out.join(format!("{id}-marker.json")));
    let text = fs::read_to_string(&marker_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(marker_path.clone()),
        _ => Error::io(&marker_path, e),
    })?;
    let marker = FittedMarker::from_json(&text, &marker_path.display().to_string())?;

    let result = controllability(&session, &marker)?;
    let chance = controllability_chance(&result, args.common.n_perm, args.common.seed)?;
    let n_samples = session
        .included_trials()
        .first()
        .and_then(|t| t.data.neural.as_ref())
        .map_or(0, |e| e.n_samples());
    let segment = n_samples.min(marker.sample_rate.round() as usize).max(2);
    let (freqs, on, off) = source_spectra(&session, &marker, segment, SPECTRUM_MAX_FREQ)?;
    let clusters = cluster_permutation_test(&on, &off, args.common.n_perm, CLUSTER_ALPHA, REPORT_ALPHA, args.common.seed)?;

    let mut report = session_report(&out, &id, run_config(&args.session, &args.common))?;
    report.controllability = Some(ControllabilitySection {
        n_trials: result.data.features.nrows(),
        auc: result.auc.clone().with_chance(&chance),
        psd_clusters: clusters.significant().into_iter().cloned().collect(),
    });
    save_report(&out, &report)?;

    let mean = |m: &DMatrix<f64>, c: usize| m.column(c).mean();
    write_csv(
        &out.join(format!("{id}-source-psd.csv")),
        &["freq_hz", "on_db", "off_db", "t"].map(String::from),
        freqs.iter().enumerate().map(|(c, f)| {
            vec![f.to_string(), mean(&on, c).to_string(), mean(&off, c).to_string(), clusters.t[c].to_string()]
        }),
    )?;
    Ok((out, id))
}

fn outcome(args: &OutcomeArgs) -> Result<(PathBuf, String)> {
    let mut reports = args.reports.iter().map(|p| read_report(p));
    let mut merged = reports.next().expect("clap requires one report")?;
    for other in reports {
        merged.merge(other?)?;
    }
    let missing = |what: &str| Error::schema("outcome-type", format!("no {what} section in the given reports"));
    let behavioral = merged.behavioral.as_ref().ok_or_else(|| missing("behavioral"))?;
    let neural = merged.neural.as_ref().ok_or_else(|| missing("neural"))?;
    let no_chance = |what: &str| Error::schema("outcome-type", format!("{what} has no permutation chance level"));
    let auc_chance = behavioral.auc.chance.ok_or_else(|| no_chance("behavioral AUC"))?;
    let r_chance = neural.r.chance.ok_or_else(|| no_chance("neural r"))?;
    let outcome = classify_outcome(
        behavioral.auc.mean,
        auc_chance,
        neural.r.mean,
        r_chance,
        behavioral.icc,
        args.icc_threshold,
    )?;
    println!(
        "{} (auc_sig={}, r_sig={}, icc_high={}): {}",
        outcome.kind,
        outcome.auc_sig,
        outcome.r_sig,
        outcome.icc_high,
        outcome.kind.description()
    );
    merged.config.icc_threshold = args.icc_threshold;
    merged.outcome = Some(outcome);
    let out = output_dir(&args.output);
    save_report(&out, &merged)?;
    Ok((out, merged.session_id))
}

#[derive(Serialize)]
struct Regression {
    x: &'static str,
    y: &'static str,
    n: usize,
    slope: f64,
    intercept: f64,
    r: f64,
    p: f64,
}

#[derive(Serialize)]
struct CountRow {
    name: String,
    count: usize,
}

#[derive(Serialize)]
struct Summary {
    n_sessions: usize,
    n_auc_significant: usize,
    n_r_significant: usize,
    n_controllable: usize,
    outcome_counts: Vec<CountRow>,
    band_counts: Vec<CountRow>,
    regressions: Vec<Regression>,
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn report(args: &ReportArgs) -> Result<PathBuf> {
    let reports = args.reports.iter().map(|p| read_report(p)).collect::<Result<Vec<_>>>()?;
    let out = output_dir(&args.output);

    let header = [
        "session", "auc", "auc_chance", "auc_significant", "icc", "target", "r", "r_chance", "r_significant",
        "controllability_auc", "controllability_chance", "outcome",
    ]
    .map(String::from);
    write_csv(
        &out.join("sessions.csv"),
        &header,
        reports.iter().map(|r| {
            let b = r.behavioral.as_ref();
            let n = r.neural.as_ref();
            let c = r.controllability.as_ref();
            vec![
                r.session_id.clone(),
                fmt_opt(b.map(|b| b.auc.mean)),
                fmt_opt(b.and_then(|b| b.auc.chance)),
                fmt_opt(b.and_then(|b| b.auc.significant)),
                fmt_opt(b.map(|b| b.icc)),
                fmt_opt(n.map(|n| serde_json::to_value(n.target).map_or(String::new(), |v| v.as_str().unwrap_or("").to_string()))),
                fmt_opt(n.map(|n| n.r.mean)),
                fmt_opt(n.and_then(|n| n.r.chance)),
                fmt_opt(n.and_then(|n| n.r.significant)),
                fmt_opt(c.map(|c| c.auc.mean)),
                fmt_opt(c.and_then(|c| c.auc.chance)),
                fmt_opt(r.outcome.map(|o| o.kind)),
            ]
        }),
    )?;
    write_csv(
        &out.join("shap.csv"),
        &["session".into(), "feature".into(), "mean_abs_shap".into()],
        reports.iter().flat_map(|r| {
            r.behavioral
                .iter()
                .flat_map(|b| b.shap.iter())
                .map(|s| vec![r.session_id.clone(), s.name.clone(), s.value.to_string()])
                .collect::<Vec<_>>()
        }),
    )?;

    let mut bands: Vec<CountRow> = Vec::new();
    for n in reports.iter().filter_map(|r| r.neural.as_ref()) {
        for b in &n.band_counts {
            match bands.iter_mut().find(|c| c.name == b.band) {
                Some(c) => c.count += b.count,
                None => bands.push(CountRow {
                    name: b.band.clone(),
                    count: b.count,
                }),
            }
        }
    }
    write_csv(
        &out.join("band-counts.csv"),
        &["band".into(), "count".into()],
        bands.iter().map(|b| vec![b.name.clone(), b.count.to_string()]),
    )?;

    let mut outcomes: Vec<CountRow> = Vec::new();
    for o in reports.iter().filter_map(|r| r.outcome) {
        let name = o.kind.to_string();
        match outcomes.iter_mut().find(|c| c.name == name) {
            Some(c) => c.count += 1,
            None => outcomes.push(CountRow { name, count: 1 }),
        }
    }
    outcomes.sort_by(|a, b| a.name.cmp(&b.name));

    type Getter = fn(&EvaluationReport) -> Option<f64>;
    let pairs: [(&'static str, Getter, &'static str, Getter); 3] = [
        ("auc", |r| r.behavioral.as_ref().map(|b| b.auc.mean), "r", |r| r.neural.as_ref().map(|n| n.r.mean)),
        ("icc", |r| r.behavioral.as_ref().map(|b| b.icc), "r", |r| r.neural.as_ref().map(|n| n.r.mean)),
        (
            "auc",
            |r| r.behavioral.as_ref().map(|b| b.auc.mean),
            "controllability_auc",
            |r| r.controllability.as_ref().map(|c| c.auc.mean),
        ),
    ];
    let mut regressions = Vec::new();
    for (xn, xf, yn, yf) in pairs {
        let (xs, ys): (Vec<f64>, Vec<f64>) = reports.iter().filter_map(|r| Some((xf(r)?, yf(r)?))).unzip();
        // fewer than three sessions, or no spread, leaves nothing to fit
        if let Ok(fit) = ols_fit(&xs, &ys) {
            regressions.push(Regression {
                x: xn,
                y: yn,
                n: xs.len(),
                slope: fit.slope,
                intercept: fit.intercept,
                r: fit.r,
                p: fit.p,
            });
        }
    }

    let count = |f: fn(&EvaluationReport) -> Option<bool>| reports.iter().filter(|r| f(r) == Some(true)).count();
    let summary = Summary {
        n_sessions: reports.len(),
        n_auc_significant: count(|r| r.behavioral.as_ref().and_then(|b| b.auc.significant)),
        n_r_significant: count(|r| r.neural.as_ref().and_then(|n| n.r.significant)),
        n_controllable: count(|r| r.controllability.as_ref().and_then(|c| c.auc.significant)),
        outcome_counts: outcomes,
        band_counts: bands,
        regressions,
    };
    let path = out.join("summary.json");
    write_json(&path, &summary)?;
    println!("{}", path.display());
    Ok(out)
}
