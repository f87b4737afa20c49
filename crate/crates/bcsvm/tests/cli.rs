//! End-to-end tests of the `bcsvm` binary: flags, outputs, exit codes, and
//! schema-valid reports.

use bcsvm::synth::{noisy_blobs, separable};
use bcsvm::Dataset;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcsvm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_ds(dir: &Path, name: &str, ds: &Dataset) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, ds.write_libsvm()).unwrap();
    path
}

fn report_validator() -> jsonschema::Validator {
    let text = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../schemas/run_report.schema.json"
    ))
    .unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid_report(dir: &Path, name: &str) -> serde_json::Value {
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap();
    let errors: Vec<String> =
        report_validator().iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "report {name} violates the schema: {errors:#?}");
    value
}

/// Drops the last (wall-time) column from every CSV line.
fn strip_times(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn train_writes_model_and_schema_valid_report_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    write_ds(dir.path(), "train.svm", &separable(40, 40, 3));
    let args = |model: &str, report: &str| {
        vec![
            "train".to_string(),
            "--data".into(),
            "train.svm".into(),
            "--kernel".into(),
            "linear".into(),
            "--cost".into(),
            "1000".into(),
            "--tol".into(),
            "1e-6".into(),
            "--layers".into(),
            "2,1".into(),
            "--partition".into(),
            "balanced".into(),
            "--seed".into(),
            "5".into(),
            "--model".into(),
            model.into(),
            "--test".into(),
            "train.svm".into(),
            "--report".into(),
            report.into(),
        ]
    };
    let a1: Vec<String> = args("m1.json", "r1.json");
    let out = run_in(dir.path(), &a1.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("accuracy 1.000000"), "stdout: {}", stdout(&out));

    let a2: Vec<String> = args("m2.json", "r2.json");
    let out2 = run_in(dir.path(), &a2.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out2.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("m1.json")).unwrap(),
        fs::read(dir.path().join("m2.json")).unwrap(),
        "same flags and seed must give a byte-identical model"
    );

    let report = assert_valid_report(dir.path(), "r1.json");
    assert_eq!(report["command"], "train");
    assert_eq!(report["accuracy"], 1.0);
    assert_eq!(report["layers"].as_array().unwrap().len(), 2);
    assert_eq!(report["config"]["layers"], serde_json::json!([2, 1]));
    assert_eq!(report["config"]["seed"], 5);
    assert!(report["model"]["sv_count"].as_u64().unwrap() >= 2);
}

#[test]
fn predict_writes_labels_and_prints_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    write_ds(dir.path(), "train.svm", &separable(30, 30, 9));
    let out = run_in(
        dir.path(),
        &[
            "train", "--data", "train.svm", "--kernel", "linear", "--cost", "1000",
            "--model", "m.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let out = run_in(
        dir.path(),
        &[
            "predict", "--model", "m.json", "--data", "train.svm", "--output", "p.txt",
            "--report", "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("accuracy 1.000000 (60/60)"), "stdout: {}", stdout(&out));
    let preds: Vec<String> =
        fs::read_to_string(dir.path().join("p.txt")).unwrap().lines().map(Into::into).collect();
    assert_eq!(preds.len(), 60);
    assert!(preds.iter().all(|p| p == "1" || p == "-1"));

    let report = assert_valid_report(dir.path(), "r.json");
    assert_eq!(report["command"], "predict");
    assert_eq!(report["accuracy"], 1.0);
}

#[test]
fn predict_on_empty_test_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    write_ds(dir.path(), "train.svm", &separable(10, 10, 1));
    let out = run_in(dir.path(), &["train", "--data", "train.svm", "--model", "m.json"]);
    assert_eq!(out.status.code(), Some(0));
    fs::write(dir.path().join("empty.svm"), "").unwrap();
    let out = run_in(dir.path(), &["predict", "--model", "m.json", "--data", "empty.svm"]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
}

#[test]
fn bench_is_deterministic_and_collapses_for_single_layer_plans() {
    let dir = tempfile::tempdir().unwrap();
    write_ds(dir.path(), "train.svm", &noisy_blobs(60, 60, 2.5, 0.05, 11));
    write_ds(dir.path(), "test.svm", &noisy_blobs(40, 40, 2.5, 0.05, 12));

    // With a [1] plan, direct, csvm, and bcsvm are the same computation.
    let out = run_in(
        dir.path(),
        &[
            "bench", "--data", "train.svm", "--test", "test.svm", "--kernel", "linear",
            "--layers", "1", "--seeds", "3,4", "--csv", "flat.csv", "--report", "flat.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("flat.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("method,seed,accuracy,sv_count,train_seconds"));
    for seed in ["3", "4"] {
        let rows: Vec<Vec<&str>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|f| f[1] == seed)
            .collect();
        assert_eq!(rows.len(), 3, "three methods per seed");
        assert!(
            rows.iter().all(|f| f[2] == rows[0][2] && f[3] == rows[0][3]),
            "layers=1 must give identical accuracy and sv_count per seed: {rows:?}"
        );
    }

    // Same flags, same seeds: byte-identical rows apart from wall times.
    for (csv_name, report_name) in [("b1.csv", "b1.json"), ("b2.csv", "b2.json")] {
        let out = run_in(
            dir.path(),
            &[
                "bench", "--data", "train.svm", "--test", "test.svm", "--kernel", "linear",
                "--layers", "2,1", "--seeds", "3,4", "--csv", csv_name, "--report",
                report_name,
            ],
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    let b1 = fs::read_to_string(dir.path().join("b1.csv")).unwrap();
    let b2 = fs::read_to_string(dir.path().join("b2.csv")).unwrap();
    assert_eq!(strip_times(&b1), strip_times(&b2));

    let report = assert_valid_report(dir.path(), "b1.json");
    assert_eq!(report["command"], "bench");
    assert_eq!(report["bench"]["rows"].as_array().unwrap().len(), 6);
    assert_eq!(report["bench"]["aggregates"].as_array().unwrap().len(), 3);
    assert_eq!(report["config"]["seeds"], serde_json::json!([3, 4]));
}

#[test]
fn retention_reports_both_partition_modes() {
    let dir = tempfile::tempdir().unwrap();
    write_ds(dir.path(), "train.svm", &separable(30, 30, 21));
    let out = run_in(
        dir.path(),
        &[
            "retention", "--data", "train.svm", "--kernel", "linear", "--cost", "1000",
            "--tol", "1e-6", "--layers", "2,1", "--seeds", "1,2,3", "--report", "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("balanced mean_layer1 1.000000"), "{}", stdout(&out));

    let report = assert_valid_report(dir.path(), "r.json");
    assert_eq!(report["retention"]["random"].as_array().unwrap().len(), 3);
    assert_eq!(report["retention"]["balanced"].as_array().unwrap().len(), 3);
    // The planted margin points survive balanced halving every time.
    for run in report["retention"]["balanced"].as_array().unwrap() {
        assert_eq!(run["layer1_fraction"], 1.0);
        assert_eq!(run["final_fraction"], 1.0);
    }
}

#[test]
fn prob_prints_exact_fractions_and_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "prob", "--psv", "2", "--nsv", "2", "--pn", "1", "--nn", "1", "--pds", "3",
            "--nds", "3", "--m", "2", "--report", "p.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("random 23/66 0.348484848485"), "{text}");
    assert!(text.contains("balanced 2/5 0.400000000000"), "{text}");
    assert!(text.contains("denominator_random 924"), "{text}");
    assert!(text.contains("denominator_balanced 400"), "{text}");
    assert!(text.contains("random_denominator_exceeds true"), "{text}");

    let report = assert_valid_report(dir.path(), "p.json");
    assert_eq!(report["prob"]["random"]["fraction"], "23/66");
    assert_eq!(report["prob"]["balanced"]["fraction"], "2/5");

    // One group keeps everything: both probabilities 1, denominators equal.
    let out = run_in(
        dir.path(),
        &[
            "prob", "--psv", "2", "--nsv", "2", "--pn", "1", "--nn", "1", "--pds", "3",
            "--nds", "3", "--m", "1",
        ],
    );
    let text = stdout(&out);
    assert!(text.contains("random 1 1.000000000000"), "{text}");
    assert!(text.contains("balanced 1 1.000000000000"), "{text}");
    assert!(text.contains("random_denominator_exceeds false"), "{text}");

    // No positive SVs to retain: probability zero either way.
    let out = run_in(
        dir.path(),
        &["prob", "--psv", "0", "--nsv", "2", "--pn", "1", "--nn", "1", "--pds", "3",
          "--nds", "3", "--m", "2"],
    );
    let text = stdout(&out);
    assert!(text.contains("random 0 0.000000000000"), "{text}");
    assert!(text.contains("balanced 0 0.000000000000"), "{text}");
}

#[test]
fn prob_census_can_come_from_training_data() {
    let dir = tempfile::tempdir().unwrap();
    let ds = noisy_blobs(40, 24, 1.5, 0.1, 17);
    write_ds(dir.path(), "train.svm", &ds);
    let out = run_in(
        dir.path(),
        &[
            "prob", "--from-data", "train.svm", "--m", "4", "--kernel", "rbf", "--gamma",
            "0.5", "--cost", "5", "--report", "p.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report = assert_valid_report(dir.path(), "p.json");
    let census = &report["prob"]["census"];
    let pos = census["p_sv"].as_u64().unwrap()
        + census["p_noise"].as_u64().unwrap()
        + census["p_common"].as_u64().unwrap();
    let neg = census["n_sv"].as_u64().unwrap()
        + census["n_noise"].as_u64().unwrap()
        + census["n_common"].as_u64().unwrap();
    assert_eq!(pos, ds.positive_count() as u64);
    assert_eq!(neg, ds.negative_count() as u64);
    assert!(report["dataset"].is_object(), "dataset stats recorded for --from-data");
    // The flip noise makes class totals indivisible by 4, so the event-space
    // comparison is reported as absent rather than failing the run.
    if ds.positive_count() % 4 != 0 || ds.negative_count() % 4 != 0 {
        assert!(report["prob"]["denominator"].is_null());
        assert!(stdout(&out).contains("denominator_comparison_unavailable"));
    }
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    write_ds(dir.path(), "ok.svm", &noisy_blobs(20, 20, 0.2, 0.4, 2));
    fs::write(dir.path().join("bad.svm"), "not a libsvm line\n").unwrap();

    // Usage: missing required flag.
    let out = run_in(dir.path(), &["bench", "--data", "ok.svm", "--test", "ok.svm"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    // Parse failure.
    let out = run_in(dir.path(), &["train", "--data", "bad.svm"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    // Configuration failure: plan does not end in one group.
    let out = run_in(dir.path(), &["train", "--data", "ok.svm", "--layers", "4,2"]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("last layer"), "{}", stderr(&out));
    // Infeasible census.
    let out = run_in(dir.path(), &["prob", "--psv", "1", "--nds", "1", "--m", "5"]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
    // Training failure: iteration cap hit and nonconvergence not allowed.
    let out = run_in(
        dir.path(),
        &["train", "--data", "ok.svm", "--kernel", "rbf", "--max-iter", "3"],
    );
    assert_eq!(out.status.code(), Some(5), "stderr: {}", stderr(&out));
    // Same run is fine when nonconvergence is allowed.
    let out = run_in(
        dir.path(),
        &[
            "train", "--data", "ok.svm", "--kernel", "rbf", "--max-iter", "3",
            "--allow-nonconverged", "--report", "nc.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report = assert_valid_report(dir.path(), "nc.json");
    assert_eq!(report["model"]["converged"], false);
    // I/O failure.
    let out = run_in(dir.path(), &["train", "--data", "missing.svm"]);
    assert_eq!(out.status.code(), Some(6), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("missing.svm"), "{}", stderr(&out));
}
