//! End-to-end checks of the `prevalence` binary: fixture pass-through,
//! output determinism, exit codes, and thread-count independence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prevalence"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

struct Fixture {
    _dir: tempfile::TempDir,
    histogram: PathBuf,
    labels: PathBuf,
}

/// Two equal-weight buckets; one negative in the low bucket, one positive in
/// the high bucket.
fn two_bucket_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let histogram = dir.path().join("hist.csv");
    let labels = dir.path().join("labels.csv");
    fs::write(&histogram, "bucket_index,count\n0,2\n1,2\n").unwrap();
    fs::write(&labels, "score,label\n0.1,0\n0.9,1\n").unwrap();
    Fixture { _dir: dir, histogram, labels }
}

fn write_spec(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("spec.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL_SPEC: &str = r#"{
    "population": {"m": 20000, "lambda": 10.0,
                   "curve": {"family": "constant", "value": 0.02}, "seed": 5},
    "n_grid": [300],
    "trials": 3,
    "methods": ["bbb", "gp", "bootstrap"],
    "seed": 9,
    "gp": {"k": 10, "chains": 2, "warmup": 50, "kept": 50},
    "bootstrap": {"resamples": 100}
}"#;

#[test]
fn estimate_on_the_two_bucket_fixture_reports_mean_half() {
    let fx = two_bucket_fixture();
    let out = run(&[
        "estimate",
        "--histogram",
        fx.histogram.to_str().unwrap(),
        "--labels",
        fx.labels.to_str().unwrap(),
        "--method",
        "bbb",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let records: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let posterior = &records[0]["posterior"];
    assert_eq!(posterior["mean"].as_f64().unwrap(), 0.5);
    assert_eq!(records[0]["method"].as_str().unwrap(), "bbb");
}

#[test]
fn estimate_output_is_byte_identical_across_runs() {
    let fx = two_bucket_fixture();
    let args = [
        "estimate",
        "--histogram",
        fx.histogram.to_str().unwrap(),
        "--labels",
        fx.labels.to_str().unwrap(),
        "--method",
        "all",
        "--iters",
        "200",
        "--chains",
        "2",
        "--seed",
        "7",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success(), "stderr: {}", stderr_str(&first));
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.is_empty());
}

#[test]
fn bad_label_value_exits_2_and_names_the_line() {
    let fx = two_bucket_fixture();
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad_labels.csv");
    fs::write(&bad, "score,label\n0.1,0\n0.9,2\n").unwrap();
    let out = run(&[
        "estimate",
        "--histogram",
        fx.histogram.to_str().unwrap(),
        "--labels",
        bad.to_str().unwrap(),
        "--method",
        "bbb",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_str(&out);
    assert!(err.contains(":3:"), "missing line info: {err}");
    assert!(err.contains("label"), "missing field info: {err}");
}

#[test]
fn invalid_estimator_config_exits_3() {
    let fx = two_bucket_fixture();
    let out = run(&[
        "estimate",
        "--histogram",
        fx.histogram.to_str().unwrap(),
        "--labels",
        fx.labels.to_str().unwrap(),
        "--method",
        "bbb",
        "--k",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flags_are_rejected() {
    let out = run(&["estimate", "--bogus-flag", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn one_trial_smoke_spec_finishes_fast_with_all_columns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{
            "population": {"m": 50000, "lambda": 10.0,
                           "curve": {"family": "logistic_highend_drop"},
                           "target_prevalence": 3e-4, "seed": 3},
            "n_grid": [1000],
            "trials": 1,
            "methods": ["bbb", "gp", "bootstrap"],
            "seed": 4
        }"#,
    );
    let summary = dir.path().join("summary.csv");
    let trials = dir.path().join("trials.csv");
    let t0 = Instant::now();
    let out = run(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--summary-out",
        summary.to_str().unwrap(),
        "--trials-out",
        trials.to_str().unwrap(),
    ]);
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    assert!(elapsed < 5.0, "smoke run took {elapsed:.1}s");

    let summary_text = fs::read_to_string(&summary).unwrap();
    let mut lines = summary_text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,N,trials,avg_ci_size,wrong_ci_rate,wrong_upper_rate,failures"
    );
    assert_eq!(lines.count(), 3);

    let trials_text = fs::read_to_string(&trials).unwrap();
    assert!(trials_text.starts_with(
        "method,N,trial,point,lower,upper,ci_size,wrong_ci,wrong_upper,converged,error\n"
    ));
    assert_eq!(trials_text.lines().count(), 1 + 3);
    assert!(stderr_str(&out).contains("N=1000"));
}

#[test]
fn zero_trials_spec_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &SMALL_SPEC.replace("\"trials\": 3", "\"trials\": 0"));
    let out = run(&["simulate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_spec_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "{ not json");
    let out = run(&["simulate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), SMALL_SPEC);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let summary = dir.path().join(format!("summary_{threads}.csv"));
        let trials = dir.path().join(format!("trials_{threads}.csv"));
        let out = run(&[
            "simulate",
            "--threads",
            threads,
            "--spec",
            spec.to_str().unwrap(),
            "--summary-out",
            summary.to_str().unwrap(),
            "--trials-out",
            trials.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_str(&out));
        outputs.push((fs::read(&summary).unwrap(), fs::read(&trials).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn prior_check_emits_grid_rows_and_minimizer() {
    let out = run(&[
        "prior-check",
        "--k",
        "5",
        "--iters",
        "100",
        "--chains",
        "2",
        "--alphas",
        "0.5,1",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["draws"].as_u64().unwrap(), 200);
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    let minimizer = report["minimizer_alpha"].as_f64().unwrap();
    assert!(minimizer == 0.5 || minimizer == 1.0);

    let csv_out = run(&[
        "prior-check",
        "--k",
        "5",
        "--iters",
        "100",
        "--chains",
        "2",
        "--alphas",
        "0.5,1",
        "--seed",
        "3",
        "--format",
        "csv",
    ]);
    let text = stdout_str(&csv_out);
    assert!(text.starts_with("alpha,ks\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn estimate_csv_format_is_flat_and_stable() {
    let fx = two_bucket_fixture();
    let out = run(&[
        "estimate",
        "--histogram",
        fx.histogram.to_str().unwrap(),
        "--labels",
        fx.labels.to_str().unwrap(),
        "--method",
        "bootstrap",
        "--resamples",
        "50",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.starts_with("method,point,lower,upper,mean,variance,rhat,converged\n"));
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("bootstrap,"));
}

#[test]
fn shipped_presets_parse_and_validate() {
    let presets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut seen = 0;
    for entry in fs::read_dir(&presets).expect("presets directory exists") {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let spec = prevalence::io::read_experiment_spec(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(spec.trials >= 1);
        seen += 1;
    }
    assert!(seen >= 3, "expected the smoke and coverage presets, found {seen}");
}
