use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use copydraw::evaluation::EvaluationReport;

fn copydraw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copydraw"))
        .args(args)
        .env_remove("COPYDRAW_OUT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = copydraw(args);
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "{args:?} failed: {stdout}{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn report(path: &Path) -> EvaluationReport {
    EvaluationReport::from_json(&fs::read_to_string(path).unwrap(), "test").unwrap()
}

#[test]
fn full_workflow_on_a_simulated_session() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = dir.path().join("s1");
    let out = dir.path().join("out");
    let (s1, out) = (s1.to_str().unwrap(), out.to_str().unwrap());

    ok(&["simulate", "--spec", "default", "--seed", "7", "-o", s1]);
    assert!(Path::new(s1).join("session.json").exists());
    assert!(Path::new(s1).join("ground_truth.json").exists());

    let perm = ["--n-perm", "40", "--seed", "3", "-o", out];
    let mut args = vec!["behavioral-decode", s1, "--dump-features"];
    args.extend(perm);
    ok(&args);
    let report_path = Path::new(out).join("synth-7-report.json");
    let r = report(&report_path);
    let b = r.behavioral.as_ref().unwrap();
    assert!(b.auc.mean > 0.9);
    assert_eq!(b.auc.n_perm, 40);
    assert_eq!(r.config.seed, 3);
    let features = fs::read_to_string(Path::new(out).join("synth-7-features.csv")).unwrap();
    assert!(features.starts_with("block,trial,condition,speed,speed_x"));
    assert_eq!(features.lines().count(), 145);

    let mut args = vec!["neural-decode", s1, "--target", "task-performance"];
    args.extend(perm);
    ok(&args);
    let r = report(&report_path);
    assert!(r.behavioral.is_some(), "sections accumulate under one configuration");
    let n = r.neural.as_ref().unwrap();
    assert_eq!(serde_json::to_value(n.target).unwrap(), "task-performance");
    assert_eq!(n.bank_size, 40);

    let mut args = vec!["neural-decode", s1];
    args.extend(perm);
    ok(&args);
    let predictions = fs::read_to_string(Path::new(out).join("synth-7-neural-predictions.csv")).unwrap();
    assert!(predictions.starts_with("trial,block,condition,true_score,predicted_score"));
    let bands = fs::read_to_string(Path::new(out).join("synth-7-band-counts.csv")).unwrap();
    assert!(bands.starts_with("band,count"));

    let mut args = vec!["controllability", s1];
    args.extend(perm);
    ok(&args);
    assert!(report(&report_path).controllability.is_some());
    assert!(Path::new(out).join("synth-7-source-psd.csv").exists());

    let stdout = ok(&["outcome-type", report_path.to_str().unwrap(), "-o", out]);
    assert!(stdout.starts_with("Type"), "{stdout}");
    assert!(stdout.contains("auc_sig=true"));
    let r = report(&report_path);
    let o = r.outcome.unwrap();
    assert!(o.auc_sig && o.r_sig);

    let summary_dir = dir.path().join("summary");
    ok(&["report", report_path.to_str().unwrap(), "-o", summary_dir.to_str().unwrap()]);
    let sessions = fs::read_to_string(summary_dir.join("sessions.csv")).unwrap();
    assert_eq!(sessions.lines().count(), 2);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(summary_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_sessions"], 1);
    assert_eq!(summary["n_auc_significant"], 1);
    assert!(Path::new(out).join("synth-7-behavioral-decode.meta.json").exists());
}

#[test]
fn reruns_are_byte_identical_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    let s = s.to_str().unwrap();
    let mut spec = copydraw::synth::SynthSpec::planted(5);
    spec.n_blocks = 4;
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    ok(&["simulate", "--spec", spec_path.to_str().unwrap(), "--seed", "5", "-o", s]);

    let mut texts = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "3"), ("c", "1")] {
        let out = dir.path().join(name);
        let out = out.to_str().unwrap();
        for cmd in ["behavioral-decode", "neural-decode"] {
            ok(&["--workers", workers, cmd, s, "--n-perm", "20", "--seed", "9", "-o", out]);
        }
        let text = fs::read_to_string(Path::new(out).join("synth-5-report.json")).unwrap();
        // the output directory is part of the embedded configuration
        texts.push(text.replace(out, "<out>"));
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn output_directory_defaults_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    let out = Command::new(env!("CARGO_BIN_EXE_copydraw"))
        .args(["simulate", "--spec", "null", "--seed", "1"])
        .env("COPYDRAW_OUT", &s)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(s.join("session.json").exists());
}

#[test]
fn exit_codes_separate_usage_validation_and_runtime_errors() {
    assert_eq!(copydraw(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(copydraw(&["behavioral-decode"]).status.code(), Some(2));
    assert_eq!(copydraw(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    let out = copydraw(&["behavioral-decode", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing file"));

    let out = copydraw(&["simulate", "--spec", "nonsense", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // an output directory that is a regular file fails at write time
    let s = dir.path().join("s");
    ok(&["simulate", "--spec", "null", "-o", s.to_str().unwrap()]);
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = copydraw(&["simulate", "--spec", "null", "-o", blocker.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn outcome_type_needs_both_sections() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    let out = dir.path().join("o");
    let mut spec = copydraw::synth::SynthSpec::planted(2);
    spec.n_blocks = 4;
    spec.neural = None;
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    ok(&["simulate", "--spec", spec_path.to_str().unwrap(), "-o", s.to_str().unwrap()]);
    ok(&["behavioral-decode", s.to_str().unwrap(), "--n-perm", "10", "-o", out.to_str().unwrap()]);
    let r = copydraw(&["outcome-type", out.join("synth-2-report.json").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("neural"));
}
