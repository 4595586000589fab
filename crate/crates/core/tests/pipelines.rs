use copydraw::evaluation::*;
use copydraw::kinematics::FeatureSet;
use copydraw::model::Session;
use copydraw::synth::{generate_session, GroundTruth, SynthSpec};

fn session(spec: SynthSpec) -> (Session, GroundTruth) {
    generate_session(&spec).unwrap()
}

#[test]
fn planted_shift_is_decoded_from_kinematics() {
    let (s, _) = session(SynthSpec::planted(11));
    let (data, result) = behavioral_decode(&s, FeatureSet::Standard).unwrap();
    assert_eq!(data.len(), 144);
    assert_eq!(result.auc.folds.len(), 6);
    assert!(result.auc.mean >= 0.9, "{}", result.auc.mean);
    let chance = behavioral_chance(&data, &chrono_folds(&s).unwrap(), 100, 1).unwrap();
    let auc = result.auc.with_chance(&chance);
    assert_eq!(auc.significant, Some(true));
    assert_eq!(auc.n_perm, 100);
    // ON trials are faster, so the speed features carry the attribution
    let top = result.shap.iter().max_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    assert!(top.name.starts_with("speed") || top.name.starts_with("accel"), "{}", top.name);
}

#[test]
fn every_feature_set_decodes_the_planted_shift() {
    let (s, _) = session(SynthSpec::planted(12));
    for set in [FeatureSet::Extended, FeatureSet::Angular] {
        let (data, result) = behavioral_decode(&s, set).unwrap();
        assert_eq!(data.features.ncols(), set.dim());
        assert!(result.auc.mean >= 0.9, "{set:?}: {}", result.auc.mean);
    }
}

#[test]
fn shuffled_label_auc_centres_on_one_half() {
    let (s, _) = session(SynthSpec::planted(13));
    let (data, _) = behavioral_decode(&s, FeatureSet::Standard).unwrap();
    let chance = behavioral_chance(&data, &chrono_folds(&s).unwrap(), 200, 4).unwrap();
    let mean = chance.distribution.iter().sum::<f64>() / 200.0;
    assert!((mean - 0.5).abs() < 0.05, "{mean}");
}

#[test]
fn comodulated_source_predicts_copydraw_scores() {
    let (s, _) = session(SynthSpec::planted(14));
    let scores = copydraw_scores(&s, FeatureSet::Standard).unwrap();
    let (data, cv, result) = neural_decode(&s, &scores, TargetKind::Copydraw, &NeuralConfig::default()).unwrap();
    assert_eq!(data.bank_size(), 40);
    assert_eq!(result.marker.selected.len(), 8);
    assert!(result.r.mean >= 0.8, "{}", result.r.mean);
    assert!(result.predictions.iter().all(Option::is_some));
    // the most relevant feature comes from the planted band
    assert!(result.marker.selected_names()[0].starts_with("beta_"), "{:?}", result.marker.selected_names());
    let chance = neural_chance(&data, &cv, 100, 2).unwrap();
    assert!(chance.chance > 0.0);
    assert_eq!(result.r.clone().with_chance(&chance).significant, Some(true));
}

#[test]
fn ecog_bank_has_twenty_band_powers() {
    let (s, truth) = session(SynthSpec::ecog(15));
    let (data, _, result) = neural_decode(&s, &truth.z, TargetKind::Custom, &NeuralConfig::default()).unwrap();
    assert_eq!(data.bank_size(), 20);
    assert_eq!(data.feature_names().len(), 20);
    assert_eq!(result.marker.selected.len(), 8);
    assert!(result.marker.components.is_empty());
    assert!(result.r.mean >= 0.8, "{}", result.r.mean);
}

#[test]
fn marker_survives_json_with_identical_predictions() {
    let (s, truth) = session(SynthSpec::planted(16));
    let (_, _, result) = neural_decode(&s, &truth.z, TargetKind::Custom, &NeuralConfig::default()).unwrap();
    let text = result.marker.to_json().unwrap();
    let back = FittedMarker::from_json(&text, "marker").unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    for t in s.included_trials().iter().step_by(17) {
        let epoch = t.data.neural.as_ref().unwrap();
        assert_eq!(back.predict(epoch).unwrap(), result.marker.predict(epoch).unwrap());
        assert_eq!(back.features(epoch).unwrap(), result.marker.features(epoch).unwrap());
    }
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["selected"] = serde_json::json!([0, 999]);
    assert!(FittedMarker::from_json(&value.to_string(), "marker").is_err());
}

#[test]
fn task_performance_target_runs_end_to_end() {
    let (s, _) = session(SynthSpec::planted(17));
    let targets: Vec<f64> = s
        .included_trials()
        .iter()
        .map(|t| copydraw::dtw::task_performance(&t.data.trace).unwrap().value)
        .collect();
    let (data, _, result) = neural_decode(&s, &targets, TargetKind::TaskPerformance, &NeuralConfig::default()).unwrap();
    assert_eq!(data.n_dropped, 0);
    assert_eq!(result.marker.target, TargetKind::TaskPerformance);
    assert!(result.r.mean.is_finite());
}

#[test]
fn non_finite_targets_are_dropped() {
    let (s, truth) = session(SynthSpec::planted(18));
    let mut z = truth.z.clone();
    z[3] = f64::INFINITY;
    z[40] = f64::NAN;
    let (data, _, _) = neural_decode(&s, &z, TargetKind::Custom, &NeuralConfig::default()).unwrap();
    assert_eq!(data.n_dropped, 2);
    assert_eq!(data.len(), 142);
}

#[test]
fn dbs_modulated_marker_is_controllable() {
    let (s, truth) = session(SynthSpec::dbs_modulated(19));
    let (_, _, result) = neural_decode(&s, &truth.z, TargetKind::Custom, &NeuralConfig::default()).unwrap();
    let ctl = controllability(&s, &result.marker).unwrap();
    assert!(ctl.auc.mean > 0.8, "{}", ctl.auc.mean);
    let chance = controllability_chance(&ctl, 100, 3).unwrap();
    assert_eq!(ctl.auc.clone().with_chance(&chance).significant, Some(true));

    // ON carries more beta power in the leading source
    let (freqs, on, off) = source_spectra(&s, &result.marker, 300, 45.0).unwrap();
    let test = cluster_permutation_test(&on, &off, 200, 0.05, 0.01, 5).unwrap();
    let sig = test.significant();
    assert!(!sig.is_empty());
    let beta = sig.iter().find(|c| c.positive && freqs[c.start] <= 30.0 && freqs[c.end] >= 12.0);
    assert!(beta.is_some(), "{sig:?}");
}

#[test]
fn behavior_only_marker_is_not_controllable() {
    let (s, truth) = session(SynthSpec::non_controllable(20));
    let (data, cv, result) = neural_decode(&s, &truth.z, TargetKind::Custom, &NeuralConfig::default()).unwrap();
    let r_chance = neural_chance(&data, &cv, 100, 1).unwrap();
    assert!(result.r.mean > r_chance.chance);
    let ctl = controllability(&s, &result.marker).unwrap();
    let chance = controllability_chance(&ctl, 100, 1).unwrap();
    assert!(ctl.auc.mean < chance.chance, "{} vs {}", ctl.auc.mean, chance.chance);
}

#[test]
fn chance_levels_do_not_depend_on_thread_count() {
    let mut spec = SynthSpec::planted(21);
    spec.n_blocks = 6;
    let (s, truth) = session(spec);
    let (data, cv, _) = neural_decode(&s, &truth.z, TargetKind::Custom, &NeuralConfig::default()).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| neural_chance(&data, &cv, 30, 9)).unwrap();
    let b = three.install(|| neural_chance(&data, &cv, 30, 9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn session_without_epochs_is_rejected_by_neural_decode() {
    let mut spec = SynthSpec::planted(22);
    spec.neural = None;
    let (s, truth) = session(spec);
    let err = neural_decode(&s, &truth.z, TargetKind::Custom, &NeuralConfig::default()).unwrap_err();
    assert!(matches!(err, copydraw::Error::MissingEpochs { .. }), "{err}");
}
