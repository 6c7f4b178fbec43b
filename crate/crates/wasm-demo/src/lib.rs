//! Browser demo: generate a synthetic title corpus with adjustable
//! corruption rates, run the full quality-estimation pipeline in the page,
//! and explore the resulting recall-threshold trade-off.
//!
//! Three operations are exported: [`default_demo_config`],
//! [`corpus_preview`] and [`run_demo`]. All exchange JSON strings so the
//! page needs nothing beyond `JSON.parse`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use indexgate::eval::{run_experiment, ExperimentSettings};
use indexgate::quality::GroupMask;
use indexgate::regress::RegressorSpec;
use indexgate::synth::{generate, SynthConfig};

fn default_n_docs() -> usize {
    700
}
fn default_rate() -> f64 {
    0.15
}
fn default_seed() -> u64 {
    42
}
fn default_estimator() -> String {
    "gradient_boosting".to_string()
}

#[derive(Serialize, Deserialize)]
struct DemoConfig {
    #[serde(default = "default_n_docs")]
    n_docs: usize,
    #[serde(default = "default_rate")]
    oov_rate: f64,
    #[serde(default = "default_rate")]
    truncation_rate: f64,
    #[serde(default = "default_rate")]
    ambiguity_rate: f64,
    #[serde(default = "default_seed")]
    seed: u64,
    /// One of: gradient_boosting, extra_trees, ada_boost_r2, tree, linear.
    #[serde(default = "default_estimator")]
    estimator: String,
}

impl DemoConfig {
    fn synth(&self) -> SynthConfig {
        SynthConfig {
            n_docs: self.n_docs.clamp(100, 3000),
            n_concepts: 60,
            n_categories: 5,
            oov_rate: self.oov_rate,
            truncation_rate: self.truncation_rate,
            ambiguity_rate: self.ambiguity_rate,
            seed: self.seed,
            ..Default::default()
        }
    }

    fn recall_spec(&self) -> Result<RegressorSpec, String> {
        let spec = match self.estimator.as_str() {
            "gradient_boosting" => RegressorSpec::GradientBoosting {
                stages: 60,
                shrinkage: 0.1,
                subsample: 1.0,
                max_depth: 3,
                min_samples_leaf: 1,
            },
            "extra_trees" => RegressorSpec::ExtraTrees {
                n_trees: 60,
                k_features: None,
                max_depth: Some(10),
                min_samples_leaf: 2,
            },
            "ada_boost_r2" => RegressorSpec::default_adaboost(),
            "tree" => RegressorSpec::Tree {
                max_depth: 6,
                min_samples_leaf: 4,
            },
            "linear" => RegressorSpec::Linear,
            other => return Err(format!("unknown estimator \"{other}\"")),
        };
        Ok(spec)
    }

    fn settings(&self) -> Result<ExperimentSettings, String> {
        Ok(ExperimentSettings {
            k_outer: 2,
            k_inner: 2,
            seed: self.seed,
            quality_terms: 150,
            groups: GroupMask::all(),
            calibration: RegressorSpec::GradientBoosting {
                stages: 25,
                shrinkage: 0.1,
                subsample: 1.0,
                max_depth: 2,
                min_samples_leaf: 1,
            },
            recall: self.recall_spec()?,
            threads: 1,
            ..Default::default()
        })
    }
}

/// Default knob values for the page.
#[wasm_bindgen]
pub fn default_demo_config() -> String {
    serde_json::to_string(&serde_json::from_str::<DemoConfig>("{}").unwrap()).unwrap()
}

#[derive(Serialize)]
struct Preview {
    n_docs: usize,
    n_concepts: usize,
    n_categories: usize,
    mean_labels: f64,
    empty_gold: usize,
    samples: Vec<SampleDoc>,
}

#[derive(Serialize)]
struct SampleDoc {
    id: String,
    text: String,
    labels: Vec<String>,
}

/// Generate the corpus and return summary statistics plus sample titles.
#[wasm_bindgen]
pub fn corpus_preview(config_json: &str) -> Result<String, JsError> {
    corpus_preview_impl(config_json).map_err(|e| JsError::new(&e))
}

fn corpus_preview_impl(config_json: &str) -> Result<String, String> {
    let config: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let corpus = generate(&config.synth()).map_err(|e| e.to_string())?;
    let docs = corpus.documents();
    let mean_labels = docs.iter().map(|d| d.gold.len()).sum::<usize>() as f64 / docs.len() as f64;
    let samples = docs
        .iter()
        .take(8)
        .map(|d| SampleDoc {
            id: d.id.clone(),
            text: d.text.clone(),
            labels: d
                .gold
                .iter()
                .map(|&c| corpus.vocabulary().concept(c).id.clone())
                .collect(),
        })
        .collect();
    let preview = Preview {
        n_docs: docs.len(),
        n_concepts: corpus.vocabulary().n_concepts(),
        n_categories: corpus.vocabulary().n_categories(),
        mean_labels,
        empty_gold: corpus.empty_gold_count(),
        samples,
    };
    serde_json::to_string(&preview).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DemoResult {
    rho: f64,
    rho_sd: f64,
    mse: f64,
    sample_f1: f64,
    micro_f1: f64,
    classifier_trainings: usize,
    n_docs: usize,
    scatter: Vec<(f64, f64)>,
    sweep: Vec<DemoSweepRow>,
}

#[derive(Serialize)]
struct DemoSweepRow {
    threshold: f64,
    coverage: f64,
    mean_recall: Option<f64>,
    mean_precision: Option<f64>,
    recall_gain: Option<f64>,
    n_selected: usize,
}

/// Run the nested cross-validation pipeline on the configured corpus and
/// return held-out estimates, metrics and the threshold sweep.
#[wasm_bindgen]
pub fn run_demo(config_json: &str) -> Result<String, JsError> {
    run_demo_impl(config_json).map_err(|e| JsError::new(&e))
}

fn run_demo_impl(config_json: &str) -> Result<String, String> {
    let config: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let corpus = generate(&config.synth()).map_err(|e| e.to_string())?;
    let report = run_experiment(&corpus, &config.settings()?).map_err(|e| e.to_string())?;

    let scatter: Vec<(f64, f64)> = report
        .estimates
        .iter()
        .filter_map(|e| e.true_recall.map(|t| (t, e.recall_hat)))
        .take(800)
        .collect();
    let sweep = report
        .sweep
        .iter()
        .map(|r| DemoSweepRow {
            threshold: r.threshold,
            coverage: r.coverage,
            mean_recall: r.mean_recall,
            mean_precision: r.mean_precision,
            recall_gain: r.recall_gain,
            n_selected: r.n_selected,
        })
        .collect();
    let result = DemoResult {
        rho: report.rho_mean,
        rho_sd: report.rho_sd,
        mse: report.mse_mean,
        sample_f1: report.sample_f1,
        micro_f1: report.micro_f1,
        classifier_trainings: report.classifier_trainings,
        n_docs: corpus.len(),
        scatter,
        sweep,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}
