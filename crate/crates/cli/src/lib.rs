//! Command implementations behind the `indexgate` binary.
//!
//! Every command is a pure function of its config and input files: reruns
//! write byte-identical outputs, and nothing is written outside the given
//! output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use indexgate::bundle::{load_bundle, save_bundle};
use indexgate::config::RunConfig;
use indexgate::corpus::{load_corpus, load_vocabulary, save_corpus, save_vocabulary};
use indexgate::eval::{
    apply_bundle, default_threshold_grid, run_ablation, run_experiment, threshold_sweep,
    train_bundle, AblationReport, DocEstimate, ExperimentReport, SweepRow,
};
use indexgate::synth::{generate, SynthConfig};

fn require_out_dir(out_dir: &Path) -> Result<()> {
    if !out_dir.is_dir() {
        bail!("output directory {} does not exist", out_dir.display());
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// CSV cell for an optional value; absent values stay empty.
fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("threshold,coverage,mean_recall,mean_precision,recall_gain,n_selected\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.threshold,
            r.coverage,
            opt_cell(r.mean_recall),
            opt_cell(r.mean_precision),
            opt_cell(r.recall_gain),
            r.n_selected
        );
    }
    out
}

fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out =
        String::from("fold,rho,mse,n_eval,n_scored,excluded_empty_gold,classifier_trainings\n");
    for f in &report.folds {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f.fold,
            f.rho,
            f.mse,
            f.n_eval,
            f.n_scored,
            f.excluded_empty_gold,
            f.classifier_trainings
        );
    }
    let _ = writeln!(out, "mean,{},{},,,,", report.rho_mean, report.mse_mean);
    let _ = writeln!(out, "sd,{},{},,,,", report.rho_sd, report.mse_sd);
    out
}

fn estimates_jsonl(estimates: &[DocEstimate]) -> Result<String> {
    let mut out = String::new();
    for e in estimates {
        let line = serde_json::to_string(e).context("serializing estimate")?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn ablation_csv(report: &AblationReport) -> String {
    let mut out = String::from(
        "mask,rho_mean,rho_sd,rho_delta_pct,mse_mean,mse_sd,mse_delta_pct,significant\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.label,
            r.rho_mean,
            r.rho_sd,
            r.rho_delta_pct,
            r.mse_mean,
            r.mse_sd,
            r.mse_delta_pct,
            r.significant
        );
    }
    out
}

/// Generate a synthetic corpus and vocabulary into the output directory.
pub fn cmd_synth(config_path: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    require_out_dir(out_dir)?;
    let mut config: SynthConfig = match config_path {
        Some(path) => {
            let raw =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let corpus = generate(&config)?;
    save_corpus(&corpus, &out_dir.join("corpus.jsonl"))?;
    save_vocabulary(corpus.vocabulary(), &out_dir.join("vocab.tsv"))?;
    eprintln!(
        "wrote {} documents, {} concepts to {}",
        corpus.len(),
        corpus.vocabulary().n_concepts(),
        out_dir.display()
    );
    Ok(())
}

/// Overrides shared by the pipeline commands.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

fn load_run_config(
    config_path: &Path,
    out_dir: Option<&Path>,
    overrides: Overrides,
) -> Result<RunConfig> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(dir) = out_dir {
        config.out_dir = dir.to_path_buf();
    }
    if let Some(seed) = overrides.seed {
        config.experiment.seed = seed;
    }
    if let Some(threads) = overrides.threads {
        config.experiment.threads = threads;
    }
    config.validate_paths()?;
    Ok(config)
}

fn load_inputs(config: &RunConfig) -> Result<indexgate::corpus::Corpus> {
    let vocabulary = load_vocabulary(&config.vocabulary)?;
    let corpus = load_corpus(&config.corpus, std::sync::Arc::new(vocabulary))?;
    if corpus.is_empty() {
        bail!("corpus {} is empty", config.corpus.display());
    }
    Ok(corpus)
}

/// Run the nested cross-validation experiment and write its reports.
pub fn cmd_run(config_path: &Path, out_dir: Option<&Path>, overrides: Overrides) -> Result<()> {
    let config = load_run_config(config_path, out_dir, overrides)?;
    let corpus = load_inputs(&config)?;
    let report = run_experiment(&corpus, &config.experiment)?;

    let dir = &config.out_dir;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&report))?;
    write_file(&dir.join("sweep.csv"), &sweep_csv(&report.sweep))?;
    let mut by_fold =
        String::from("fold,threshold,coverage,mean_recall,mean_precision,recall_gain,n_selected\n");
    for (fold, rows) in report.sweep_by_fold.iter().enumerate() {
        for r in rows {
            let _ = writeln!(
                by_fold,
                "{},{},{},{},{},{},{}",
                fold,
                r.threshold,
                r.coverage,
                opt_cell(r.mean_recall),
                opt_cell(r.mean_precision),
                opt_cell(r.recall_gain),
                r.n_selected
            );
        }
    }
    write_file(&dir.join("sweep_by_fold.csv"), &by_fold)?;
    write_file(
        &dir.join("estimates.jsonl"),
        &estimates_jsonl(&report.estimates)?,
    )?;
    let summary = serde_json::json!({
        "rho_mean": report.rho_mean,
        "rho_sd": report.rho_sd,
        "mse_mean": report.mse_mean,
        "mse_sd": report.mse_sd,
        "classifier_trainings": report.classifier_trainings,
        "sample_f1": report.sample_f1,
        "micro_f1": report.micro_f1,
        "groups": report.mask,
    });
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    eprintln!(
        "rho {:.3} +- {:.3}, mse {:.4} +- {:.4} over {} folds -> {}",
        report.rho_mean,
        report.rho_sd,
        report.mse_mean,
        report.mse_sd,
        report.folds.len(),
        dir.display()
    );
    Ok(())
}

/// Run the feature-group ablation/isolation study and write its table.
pub fn cmd_ablate(config_path: &Path, out_dir: Option<&Path>, overrides: Overrides) -> Result<()> {
    let config = load_run_config(config_path, out_dir, overrides)?;
    let corpus = load_inputs(&config)?;
    let report = run_ablation(&corpus, &config.experiment)?;
    write_file(&config.out_dir.join("ablation.csv"), &ablation_csv(&report))?;
    eprintln!(
        "{} ablation rows -> {}",
        report.rows.len(),
        config.out_dir.display()
    );
    Ok(())
}

/// Re-threshold an existing estimate dump into a new sweep table.
pub fn cmd_sweep(
    estimates_path: &Path,
    out_dir: &Path,
    thresholds: Option<Vec<f64>>,
) -> Result<()> {
    require_out_dir(out_dir)?;
    let raw = fs::read_to_string(estimates_path)
        .with_context(|| format!("reading {}", estimates_path.display()))?;
    let mut estimates = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let e: DocEstimate = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", estimates_path.display(), i + 1))?;
        estimates.push(e);
    }
    if estimates.is_empty() {
        bail!("{} holds no estimates", estimates_path.display());
    }
    let grid = thresholds.unwrap_or_else(default_threshold_grid);
    let est: Vec<f64> = estimates.iter().map(|e| e.recall_hat).collect();
    let rec: Vec<Option<f64>> = estimates.iter().map(|e| e.true_recall).collect();
    let prec: Vec<f64> = estimates.iter().map(|e| e.true_precision).collect();
    let rows = threshold_sweep(&est, &rec, &prec, &grid)?;
    write_file(&out_dir.join("sweep.csv"), &sweep_csv(&rows))?;
    eprintln!("{} sweep rows -> {}", rows.len(), out_dir.display());
    Ok(())
}

/// Train a deployable model bundle on the full corpus.
pub fn cmd_train(
    config_path: &Path,
    out_dir: Option<&Path>,
    overrides: Overrides,
) -> Result<PathBuf> {
    let config = load_run_config(config_path, out_dir, overrides)?;
    let corpus = load_inputs(&config)?;
    let bundle = train_bundle(&corpus, &config.experiment)?;
    let path = config.out_dir.join("bundle.json");
    save_bundle(&bundle, &path)?;
    eprintln!("bundle -> {}", path.display());
    Ok(path)
}

/// Apply a trained bundle to a corpus, emitting assignments and quality
/// estimates as JSON lines.
pub fn cmd_predict(bundle_path: &Path, corpus_path: &Path, out_dir: &Path) -> Result<()> {
    require_out_dir(out_dir)?;
    let bundle = load_bundle(bundle_path)?;
    let vocabulary = std::sync::Arc::new(bundle.vocabulary.clone());
    let corpus = load_corpus(corpus_path, vocabulary)?;
    let mut out = String::new();
    for doc in corpus.documents() {
        let (pred, estimate) = apply_bundle(&bundle, &doc.id, &doc.text)?;
        let assigned: Vec<serde_json::Value> = pred
            .assigned()
            .iter()
            .map(|&(c, pi)| {
                serde_json::json!({
                    "concept": bundle.vocabulary.concept(c).id,
                    "confidence": pi,
                })
            })
            .collect();
        let line = serde_json::json!({
            "id": doc.id,
            "assigned": assigned,
            "recall_hat": estimate.recall_hat,
            "precision_scores": estimate.precision,
        });
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    write_file(&out_dir.join("predictions.jsonl"), &out)?;
    eprintln!("{} predictions -> {}", corpus.len(), out_dir.display());
    Ok(())
}
