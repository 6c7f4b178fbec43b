//! End-to-end command tests over a small synthetic corpus.

use std::fs;
use std::path::Path;

use indexgate_cli::{cmd_ablate, cmd_predict, cmd_run, cmd_sweep, cmd_synth, cmd_train, Overrides};

fn write_run_config(dir: &Path, out_dir: &Path) -> std::path::PathBuf {
    let config = serde_json::json!({
        "corpus": dir.join("corpus.jsonl"),
        "vocabulary": dir.join("vocab.tsv"),
        "out_dir": out_dir,
        "k_outer": 2,
        "k_inner": 2,
        "seed": 5,
        "quality_terms": 120,
        "calibration": {"kind": "gradient_boosting", "stages": 20, "max_depth": 2},
        "recall": {"kind": "gradient_boosting", "stages": 40},
        "mlc": {"epochs": 8}
    });
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn synth_config(dir: &Path) -> std::path::PathBuf {
    let config = serde_json::json!({
        "n_docs": 420,
        "n_concepts": 50,
        "n_categories": 4,
        "seed": 9
    });
    let path = dir.join("synth.json");
    fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    path
}

#[test]
fn synth_writes_deterministic_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    fs::create_dir(&out_a).unwrap();
    fs::create_dir(&out_b).unwrap();
    cmd_synth(Some(&config), &out_a, None).unwrap();
    cmd_synth(Some(&config), &out_b, None).unwrap();
    let corpus_a = fs::read(out_a.join("corpus.jsonl")).unwrap();
    let corpus_b = fs::read(out_b.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus_a, corpus_b);
    assert_eq!(
        corpus_a
            .split(|&b| b == b'\n')
            .filter(|l| !l.is_empty())
            .count(),
        420
    );
    assert_eq!(
        fs::read(out_a.join("vocab.tsv")).unwrap(),
        fs::read(out_b.join("vocab.tsv")).unwrap()
    );

    // A different seed changes the corpus.
    let out_c = dir.path().join("c");
    fs::create_dir(&out_c).unwrap();
    cmd_synth(Some(&config), &out_c, Some(1234)).unwrap();
    assert_ne!(corpus_a, fs::read(out_c.join("corpus.jsonl")).unwrap());
}

#[test]
fn synth_default_config_writes_5000_documents() {
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(None, dir.path(), None).unwrap();
    let corpus = fs::read_to_string(dir.path().join("corpus.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 5000);
    let vocab = fs::read_to_string(dir.path().join("vocab.tsv")).unwrap();
    assert_eq!(vocab.lines().count(), 201, "header + 200 concepts");
}

#[test]
fn synth_requires_an_existing_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let err = cmd_synth(None, &missing, None).unwrap_err();
    assert!(err.to_string().contains("does not exist"));
}

#[test]
fn run_ablate_sweep_train_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    cmd_synth(Some(&synth_config(dir.path())), &data, None).unwrap();
    fs::rename(dir.path().join("synth.json"), data.join("synth.json")).ok();

    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    let run_config = write_run_config(&data, &out);

    cmd_run(&run_config, None, Overrides::default()).unwrap();
    for file in [
        "metrics.csv",
        "sweep.csv",
        "sweep_by_fold.csv",
        "estimates.jsonl",
        "summary.json",
    ] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let first_row = sweep.lines().nth(1).unwrap();
    assert!(
        first_row.starts_with("0,1,"),
        "coverage should start at 1: {first_row}"
    );
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2 + 2, "2 folds + mean + sd");

    cmd_ablate(&run_config, None, Overrides::default()).unwrap();
    let ablation = fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(ablation.lines().count(), 10, "header + 9 rows");
    let full_row = ablation.lines().nth(1).unwrap();
    assert!(full_row.starts_with("V+C+LC+PI,"));
    assert!(
        full_row.contains(",0,"),
        "full mask delta is zero: {full_row}"
    );

    // Re-thresholding the dump reproduces the pooled sweep.
    let sweep_out = dir.path().join("sweep2");
    fs::create_dir(&sweep_out).unwrap();
    cmd_sweep(&out.join("estimates.jsonl"), &sweep_out, None).unwrap();
    assert_eq!(
        sweep,
        fs::read_to_string(sweep_out.join("sweep.csv")).unwrap()
    );

    // Custom grid honors the given thresholds.
    cmd_sweep(
        &out.join("estimates.jsonl"),
        &sweep_out,
        Some(vec![0.0, 0.5, 1.0]),
    )
    .unwrap();
    let custom = fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    assert_eq!(custom.lines().count(), 4);

    let bundle_path = cmd_train(&run_config, None, Overrides::default()).unwrap();
    assert!(bundle_path.is_file());

    let predict_out = dir.path().join("pred");
    fs::create_dir(&predict_out).unwrap();
    cmd_predict(&bundle_path, &data.join("corpus.jsonl"), &predict_out).unwrap();
    let predictions = fs::read_to_string(predict_out.join("predictions.jsonl")).unwrap();
    assert_eq!(predictions.lines().count(), 420);
    let first: serde_json::Value =
        serde_json::from_str(predictions.lines().next().unwrap()).unwrap();
    assert!(first["recall_hat"].as_f64().unwrap() >= 0.0);
    assert!(first["precision_scores"]["product"].as_f64().unwrap() <= 1.0);
    assert!(first["assigned"].is_array());
}

#[test]
fn run_is_byte_deterministic_across_reruns_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    cmd_synth(Some(&synth_config(dir.path())), &data, None).unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    fs::create_dir(&out_a).unwrap();
    fs::create_dir(&out_b).unwrap();
    let config = write_run_config(&data, &out_a);

    cmd_run(&config, None, Overrides::default()).unwrap();
    cmd_run(
        &config,
        Some(&out_b),
        Overrides {
            seed: None,
            threads: Some(2),
        },
    )
    .unwrap();
    for file in [
        "metrics.csv",
        "sweep.csv",
        "sweep_by_fold.csv",
        "estimates.jsonl",
    ] {
        assert_eq!(
            fs::read(out_a.join(file)).unwrap(),
            fs::read(out_b.join(file)).unwrap(),
            "{file} differs across thread counts"
        );
    }
}

#[test]
fn invalid_configs_fail_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"corpus":"x.jsonl","vocabulary":"v.tsv","out_dir":".","recall":{"kind":"mystery"}}"#,
    )
    .unwrap();
    let err = cmd_run(&bad, None, Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("configuration error"), "{err}");

    // Valid JSON but missing input files.
    let missing = dir.path().join("missing.json");
    fs::write(
        &missing,
        r#"{"corpus":"x.jsonl","vocabulary":"v.tsv","out_dir":"."}"#,
    )
    .unwrap();
    let err = cmd_run(&missing, None, Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("does not exist"), "{err}");
}

#[test]
fn predict_rejects_corrupt_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle.json");
    fs::write(&bundle, "{\"version\": 1, \"trunca").unwrap();
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    let err = cmd_predict(&bundle, &bundle, &out).unwrap_err();
    assert!(err.to_string().contains("corrupt"), "{err}");
}
