//! Chronological cross-validation, permutation chance levels, the
//! behavioral and neural decoding pipelines, controllability, cluster
//! permutation tests and the outcome taxonomy.

mod behavioral;
mod cluster;
mod controllability;
mod folds;
mod neural;
mod outcome;
mod permutation;
mod report;

pub use behavioral::{
    behavioral_chance, behavioral_decode, copydraw_scores, cv_lda_auc, decode_features, full_model, BehavioralData,
    BehavioralResult, TrialKey,
};
pub use cluster::{cluster_permutation_test, Cluster, ClusterTest};
pub use controllability::{
    controllability, controllability_chance, leading_source, source_spectra, ControllabilityResult, MarkerFeatures,
};
pub use folds::{chrono_folds, fold_rows, folds_for_conditions, ChronoFold, FoldRows};
pub use neural::{
    neural_chance, neural_decode, FittedMarker, NeuralConfig, NeuralCv, NeuralData, NeuralResult, TargetKind,
    MARKER_SCHEMA_VERSION,
};
pub use outcome::{classify_outcome, outcome_from_flags, Outcome, OutcomeType, DEFAULT_ICC_THRESHOLD};
pub use permutation::{
    derive_seed, permutation_distribution, replicate_rng, shuffled, PermutationResult, CHANCE_PERCENTILE,
    DEFAULT_N_PERM,
};
pub use report::{
    mean_of_scored, BandCount, BehavioralSection, ControllabilitySection, CvMetric, EvaluationReport, FoldMetric,
    NamedValue, NeuralSection, RunConfig, REPORT_SCHEMA_VERSION,
};
