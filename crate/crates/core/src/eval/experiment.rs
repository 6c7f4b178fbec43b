//! The nested cross-validation protocol for quality estimation.
//!
//! For each outer fold, every inner fold trains a classifier and a label
//! calibrator on its dev-train split and describes the held-out dev-test
//! documents as feature rows paired with their true recall. The recall
//! estimator is trained on the union of those rows. A fresh validation
//! classifier + calibrator pair, trained on a seeded random sample of
//! dev-train size, then produces the features on the outer evaluation fold,
//! where the estimator's output is compared against true recall. With k
//! outer and k inner folds this costs k*(k+1) classifier trainings, e.g.
//! 5*6 = 30.
//!
//! Feature rows are always extracted with all groups active; group masks are
//! applied by column projection when the estimator is trained or applied,
//! which is equivalent to masked extraction and lets an ablation study reuse
//! one protocol run. Quality terms (the TERM indicator list) come from the
//! outer training split so all inner folds share one feature space.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bundle::{ModelBundle, BUNDLE_VERSION};
use crate::config::MlcSettings;
use crate::corpus::{make_folds, make_partitions, Corpus, FoldPlan};
use crate::error::{Error, Result};
use crate::eval::{self, sweep, SweepRow};
use crate::mlc::{train_brlr, BrlrModel, MlcParams};
use crate::quality::{
    precision_scores, train_calibration, train_recall_estimator, CalibrationModel,
    FeatureExtractor, FeatureLayout, GroupMask, PrecisionScores,
};
use crate::regress::RegressorSpec;
use crate::rng::{self, Rng};
use crate::text::{tokenize, vectorize, TermIndex, TokenSeq};

fn default_k() -> usize {
    5
}
fn default_seed() -> u64 {
    42
}
fn default_quality_terms() -> usize {
    1000
}
fn default_mask() -> GroupMask {
    GroupMask::all()
}
fn default_calibration() -> RegressorSpec {
    // One fit per category per classifier training; the protocol's hottest loop.
    RegressorSpec::GradientBoosting {
        stages: 50,
        shrinkage: 0.1,
        subsample: 1.0,
        max_depth: 3,
        min_samples_leaf: 1,
    }
}
fn default_recall() -> RegressorSpec {
    RegressorSpec::default_gradient_boosting()
}
fn default_threads() -> usize {
    1
}

/// Everything the protocol needs besides the corpus itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    #[serde(default = "default_k")]
    pub k_outer: usize,
    #[serde(default = "default_k")]
    pub k_inner: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub mlc: MlcSettings,
    /// Cap on the TERM indicator list used by calibration and the C group.
    #[serde(default = "default_quality_terms")]
    pub quality_terms: usize,
    #[serde(default = "default_mask")]
    pub groups: GroupMask,
    #[serde(default = "default_calibration")]
    pub calibration: RegressorSpec,
    #[serde(default = "default_recall")]
    pub recall: RegressorSpec,
    /// Ascending recall thresholds for the sweep tables.
    #[serde(default = "sweep::default_threshold_grid")]
    pub thresholds: Vec<f64>,
    /// Worker threads for outer folds; affects speed only, never results.
    #[serde(default = "default_threads")]
    pub threads: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.quality_terms == 0 {
            return Err(Error::config("quality_terms must be at least 1"));
        }
        if !self.groups.any() {
            return Err(Error::config("at least one feature group must be active"));
        }
        if self.threads == 0 {
            return Err(Error::config("threads must be at least 1"));
        }
        self.mlc.validate()?;
        Ok(())
    }
}

/// One evaluated document of an outer fold.
#[derive(Clone, Debug)]
struct EvalDoc {
    doc_id: String,
    full_row: Vec<f64>,
    true_recall: Option<f64>,
    true_precision: f64,
    precision: PrecisionScores,
    tp: usize,
    fp: usize,
    fn_: usize,
    n_assigned: usize,
}

/// Mask-independent result of one outer fold: estimator training rows and
/// described evaluation documents.
#[derive(Clone, Debug)]
pub struct FoldData {
    fold: usize,
    layout: FeatureLayout,
    train_rows: Vec<Vec<f64>>,
    train_recalls: Vec<f64>,
    eval_docs: Vec<EvalDoc>,
    excluded_empty_gold: usize,
    classifier_trainings: usize,
}

/// The protocol's mask-independent output.
#[derive(Clone, Debug)]
pub struct ProtocolOutput {
    folds: Vec<FoldData>,
    pub classifier_trainings: usize,
}

/// Classifier + calibrator trained on one document slice.
struct PipelineModels {
    index: TermIndex,
    brlr: BrlrModel,
    calibration: CalibrationModel,
}

fn train_pipeline(
    corpus: &Corpus,
    tokens: &[TokenSeq],
    doc_indices: &[usize],
    quality_terms: &[String],
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<PipelineModels> {
    let docs = corpus.documents();
    let slice_tokens: Vec<TokenSeq> = doc_indices.iter().map(|&i| tokens[i].clone()).collect();
    let index = TermIndex::build(&slice_tokens, settings.mlc.min_df, settings.mlc.max_terms)?;
    let vectors: Vec<_> = slice_tokens.iter().map(|t| vectorize(t, &index)).collect();
    let golds: Vec<&BTreeSet<u32>> = doc_indices.iter().map(|&i| &docs[i].gold).collect();
    let params = MlcParams {
        sgd: settings.mlc.sgd_params(),
        threshold: settings.mlc.threshold,
        seed: rng::derive_str(seed, "mlc"),
    };
    let brlr = train_brlr(&vectors, &golds, corpus.vocabulary(), index.len(), &params)?;

    let gold_counts: Vec<Vec<f64>> = doc_indices
        .iter()
        .map(|&i| corpus.gold_counts_per_category(&docs[i]))
        .collect();
    let calibration = train_calibration(
        &slice_tokens,
        &gold_counts,
        corpus.vocabulary().categories(),
        quality_terms.to_vec(),
        &settings.calibration,
        rng::derive_str(seed, "calibration"),
    )?;
    Ok(PipelineModels {
        index,
        brlr,
        calibration,
    })
}

fn describe_doc(
    corpus: &Corpus,
    tokens: &TokenSeq,
    doc_index: usize,
    models: &PipelineModels,
    extractor: &FeatureExtractor,
) -> Result<EvalDoc> {
    let doc = &corpus.documents()[doc_index];
    let x = vectorize(tokens, &models.index);
    let pred = models.brlr.predict(&doc.id, &x);
    let calibrated = models.calibration.predict(tokens);
    let full_row = extractor.extract_full(
        tokens,
        &pred,
        &calibrated,
        &models.index,
        corpus.vocabulary(),
    )?;
    let assigned = pred.assigned_set();
    let (tp, fp, fn_) = eval::doc_counts(&doc.gold, &assigned);
    Ok(EvalDoc {
        doc_id: doc.id.clone(),
        full_row,
        true_recall: eval::doc_recall(&doc.gold, &assigned),
        true_precision: eval::doc_precision(&doc.gold, &assigned),
        precision: precision_scores(&pred),
        tp,
        fp,
        fn_,
        n_assigned: pred.len(),
    })
}

fn run_fold(
    corpus: &Corpus,
    tokens: &[TokenSeq],
    plan: &FoldPlan,
    fold: usize,
    settings: &ExperimentSettings,
) -> Result<FoldData> {
    let outer_train = plan.outer_train(fold);
    let fold_seed = rng::derive(rng::derive_str(settings.seed, "fold"), fold as u64);

    // Quality-term list shared by all models of this fold.
    let outer_tokens: Vec<TokenSeq> = outer_train.iter().map(|&i| tokens[i].clone()).collect();
    let quality_terms = TermIndex::build(&outer_tokens, 1, settings.quality_terms)?
        .top_terms(settings.quality_terms);
    let extractor = FeatureExtractor::new(
        quality_terms.clone(),
        corpus.vocabulary().n_categories(),
        GroupMask::all(),
    );

    let mut classifier_trainings = 0;
    let mut train_rows = Vec::new();
    let mut train_recalls = Vec::new();
    for inner in 0..settings.k_inner {
        let dev_test = &plan.inner[fold][inner];
        let mut dev_train: Vec<usize> = plan.inner[fold]
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != inner)
            .flat_map(|(_, part)| part.iter().copied())
            .collect();
        dev_train.sort_unstable();
        let models = train_pipeline(
            corpus,
            tokens,
            &dev_train,
            &quality_terms,
            settings,
            rng::derive(fold_seed, inner as u64),
        )?;
        classifier_trainings += 1;
        for &d in dev_test {
            let described = describe_doc(corpus, &tokens[d], d, &models, &extractor)?;
            // Documents without a defined recall cannot supply a target.
            if let Some(recall) = described.true_recall {
                train_rows.push(described.full_row);
                train_recalls.push(recall);
            }
        }
    }

    // Validation models: fresh training on a random sample of dev-train size.
    let dev_train_size = outer_train.len() - plan.inner[fold][0].len();
    let mut sample_rng = Rng::from_seed(rng::derive_str(fold_seed, "validation-sample"));
    let mut sample: Vec<usize> = sample_rng
        .sample_indices(outer_train.len(), dev_train_size)
        .into_iter()
        .map(|i| outer_train[i])
        .collect();
    sample.sort_unstable();
    let val_models = train_pipeline(
        corpus,
        tokens,
        &sample,
        &quality_terms,
        settings,
        rng::derive_str(fold_seed, "validation"),
    )?;
    classifier_trainings += 1;

    let mut eval_docs = Vec::with_capacity(plan.outer[fold].len());
    let mut excluded = 0;
    for &d in &plan.outer[fold] {
        let described = describe_doc(corpus, &tokens[d], d, &val_models, &extractor)?;
        excluded += usize::from(described.true_recall.is_none());
        eval_docs.push(described);
    }

    Ok(FoldData {
        fold,
        layout: extractor.layout(),
        train_rows,
        train_recalls,
        eval_docs,
        excluded_empty_gold: excluded,
        classifier_trainings,
    })
}

/// Run the mask-independent part of the protocol: all classifier and
/// calibration trainings plus feature extraction, for every outer fold.
pub fn run_protocol(corpus: &Corpus, settings: &ExperimentSettings) -> Result<ProtocolOutput> {
    settings.validate()?;
    let plan = make_folds(
        corpus.len(),
        settings.k_outer,
        settings.k_inner,
        settings.seed,
    )?;
    let tokens: Vec<TokenSeq> = corpus
        .documents()
        .iter()
        .map(|d| tokenize(&d.text))
        .collect();

    let fold_results: Vec<Result<FoldData>> = if settings.threads <= 1 {
        (0..settings.k_outer)
            .map(|fold| run_fold(corpus, &tokens, &plan, fold, settings))
            .collect()
    } else {
        parallel_folds(corpus, &tokens, &plan, settings)
    };

    let mut folds = Vec::with_capacity(settings.k_outer);
    for result in fold_results {
        folds.push(result?);
    }
    let classifier_trainings = folds.iter().map(|f| f.classifier_trainings).sum();
    Ok(ProtocolOutput {
        folds,
        classifier_trainings,
    })
}

/// Strided fan-out over outer folds; results are reassembled in fold order
/// so thread count cannot change any output.
fn parallel_folds(
    corpus: &Corpus,
    tokens: &[TokenSeq],
    plan: &FoldPlan,
    settings: &ExperimentSettings,
) -> Vec<Result<FoldData>> {
    let workers = settings.threads.min(settings.k_outer);
    let mut slots: Vec<Option<Result<FoldData>>> = (0..settings.k_outer).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for w in 0..workers {
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut fold = w;
                while fold < settings.k_outer {
                    out.push((fold, run_fold(corpus, tokens, plan, fold, settings)));
                    fold += workers;
                }
                out
            }));
        }
        for handle in handles {
            for (fold, result) in handle.join().expect("fold worker panicked") {
                slots[fold] = Some(result);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every fold ran"))
        .collect()
}

/// Per-fold quality-estimation metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub rho: f64,
    pub mse: f64,
    /// Evaluated documents in this fold.
    pub n_eval: usize,
    /// Documents entering rho/MSE (non-empty gold).
    pub n_scored: usize,
    pub excluded_empty_gold: usize,
    pub classifier_trainings: usize,
}

/// Quality estimate and ground truth of one evaluated document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocEstimate {
    pub fold: usize,
    pub doc_id: String,
    pub recall_hat: f64,
    pub true_recall: Option<f64>,
    pub true_precision: f64,
    pub precision: PrecisionScores,
    pub n_assigned: usize,
}

/// Full experiment result: per-fold metrics with aggregates, per-document
/// estimates, and sweep tables (pooled and per fold).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mask: GroupMask,
    pub folds: Vec<FoldMetrics>,
    pub rho_mean: f64,
    pub rho_sd: f64,
    pub mse_mean: f64,
    pub mse_sd: f64,
    pub classifier_trainings: usize,
    pub sample_f1: f64,
    pub micro_f1: f64,
    pub estimates: Vec<DocEstimate>,
    pub sweep: Vec<SweepRow>,
    pub sweep_by_fold: Vec<Vec<SweepRow>>,
}

pub(crate) struct MaskEvaluation {
    pub folds: Vec<FoldMetrics>,
    pub estimates: Vec<DocEstimate>,
    pub rho_mean: f64,
    pub rho_sd: f64,
    pub mse_mean: f64,
    pub mse_sd: f64,
}

/// Train and evaluate the recall estimator under one feature-group mask.
pub(crate) fn evaluate_mask(
    protocol: &ProtocolOutput,
    mask: GroupMask,
    recall_spec: &RegressorSpec,
    seed: u64,
) -> Result<MaskEvaluation> {
    let estimator_seed = rng::derive_str(seed, "recall-estimator");
    let mut fold_metrics = Vec::with_capacity(protocol.folds.len());
    let mut estimates = Vec::new();
    for data in &protocol.folds {
        let estimator = train_recall_estimator(
            &data.train_rows,
            &data.train_recalls,
            data.layout,
            mask,
            recall_spec,
            rng::derive(estimator_seed, data.fold as u64),
        )?;
        let mut predicted = Vec::new();
        let mut truth = Vec::new();
        for doc in &data.eval_docs {
            let recall_hat = estimator.estimate_full(&doc.full_row)?;
            if let Some(r) = doc.true_recall {
                predicted.push(recall_hat);
                truth.push(r);
            }
            estimates.push(DocEstimate {
                fold: data.fold,
                doc_id: doc.doc_id.clone(),
                recall_hat,
                true_recall: doc.true_recall,
                true_precision: doc.true_precision,
                precision: doc.precision,
                n_assigned: doc.n_assigned,
            });
        }
        fold_metrics.push(FoldMetrics {
            fold: data.fold,
            rho: eval::pearson(&predicted, &truth)?,
            mse: eval::mse(&predicted, &truth)?,
            n_eval: data.eval_docs.len(),
            n_scored: truth.len(),
            excluded_empty_gold: data.excluded_empty_gold,
            classifier_trainings: data.classifier_trainings,
        });
    }
    let (rho_mean, rho_sd) = eval::mean_sd(&fold_metrics.iter().map(|f| f.rho).collect::<Vec<_>>());
    let (mse_mean, mse_sd) = eval::mean_sd(&fold_metrics.iter().map(|f| f.mse).collect::<Vec<_>>());
    Ok(MaskEvaluation {
        folds: fold_metrics,
        estimates,
        rho_mean,
        rho_sd,
        mse_mean,
        mse_sd,
    })
}

fn sweep_of(estimates: &[&DocEstimate], thresholds: &[f64]) -> Result<Vec<SweepRow>> {
    let est: Vec<f64> = estimates.iter().map(|e| e.recall_hat).collect();
    let rec: Vec<Option<f64>> = estimates.iter().map(|e| e.true_recall).collect();
    let prec: Vec<f64> = estimates.iter().map(|e| e.true_precision).collect();
    sweep::threshold_sweep(&est, &rec, &prec, thresholds)
}

/// Run the complete experiment under the settings' feature-group mask.
pub fn run_experiment(corpus: &Corpus, settings: &ExperimentSettings) -> Result<ExperimentReport> {
    let protocol = run_protocol(corpus, settings)?;
    report_for_mask(&protocol, settings.groups, settings)
}

/// Train a deployable bundle on the whole corpus. Recall-estimator rows come
/// from a k_inner-fold split (train on the rest, describe the held-out
/// part); the final classifier and calibrator are then retrained on all
/// documents, and the estimator on the union of held-out rows.
pub fn train_bundle(corpus: &Corpus, settings: &ExperimentSettings) -> Result<ModelBundle> {
    settings.validate()?;
    let parts = make_partitions(corpus.len(), settings.k_inner, settings.seed)?;
    let tokens: Vec<TokenSeq> = corpus
        .documents()
        .iter()
        .map(|d| tokenize(&d.text))
        .collect();
    let seed = rng::derive_str(settings.seed, "bundle");

    let quality_terms =
        TermIndex::build(&tokens, 1, settings.quality_terms)?.top_terms(settings.quality_terms);
    let extractor = FeatureExtractor::new(
        quality_terms.clone(),
        corpus.vocabulary().n_categories(),
        GroupMask::all(),
    );

    let mut train_rows = Vec::new();
    let mut train_recalls = Vec::new();
    for (i, held_out) in parts.iter().enumerate() {
        let mut train: Vec<usize> = parts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        train.sort_unstable();
        let models = train_pipeline(
            corpus,
            &tokens,
            &train,
            &quality_terms,
            settings,
            rng::derive(seed, i as u64),
        )?;
        for &d in held_out {
            let described = describe_doc(corpus, &tokens[d], d, &models, &extractor)?;
            if let Some(recall) = described.true_recall {
                train_rows.push(described.full_row);
                train_recalls.push(recall);
            }
        }
    }
    let recall = train_recall_estimator(
        &train_rows,
        &train_recalls,
        extractor.layout(),
        settings.groups,
        &settings.recall,
        rng::derive_str(seed, "recall-estimator"),
    )?;

    let all: Vec<usize> = (0..corpus.len()).collect();
    let final_models = train_pipeline(
        corpus,
        &tokens,
        &all,
        &quality_terms,
        settings,
        rng::derive_str(seed, "final"),
    )?;
    Ok(ModelBundle {
        version: BUNDLE_VERSION,
        vocabulary: corpus.vocabulary().clone(),
        term_index: final_models.index,
        classifier: final_models.brlr,
        calibration: final_models.calibration,
        recall,
        settings: settings.clone(),
    })
}

/// Index one document with a trained bundle and estimate its quality.
pub fn apply_bundle(
    bundle: &ModelBundle,
    doc_id: &str,
    text: &str,
) -> Result<(crate::mlc::Prediction, crate::quality::QualityEstimate)> {
    let tokens = tokenize(text);
    let x = vectorize(&tokens, &bundle.term_index);
    let pred = bundle.classifier.predict(doc_id, &x);
    let calibrated = bundle.calibration.predict(&tokens);
    let extractor = FeatureExtractor::new(
        bundle.calibration.quality_terms().to_vec(),
        bundle.vocabulary.n_categories(),
        GroupMask::all(),
    );
    let full_row = extractor.extract_full(
        &tokens,
        &pred,
        &calibrated,
        &bundle.term_index,
        &bundle.vocabulary,
    )?;
    let recall_hat = bundle.recall.estimate_full(&full_row)?;
    let estimate = crate::quality::QualityEstimate {
        doc_id: doc_id.to_string(),
        recall_hat,
        precision: precision_scores(&pred),
    };
    Ok((pred, estimate))
}

pub(crate) fn report_for_mask(
    protocol: &ProtocolOutput,
    mask: GroupMask,
    settings: &ExperimentSettings,
) -> Result<ExperimentReport> {
    let evaluation = evaluate_mask(protocol, mask, &settings.recall, settings.seed)?;

    // Classifier quality over all evaluated documents (validation models).
    let mut sample_sum = 0.0;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    let mut n_docs = 0usize;
    for data in &protocol.folds {
        for doc in &data.eval_docs {
            sample_sum += eval::f1_from_counts(doc.tp, doc.fp, doc.fn_);
            tp += doc.tp;
            fp += doc.fp;
            fn_ += doc.fn_;
            n_docs += 1;
        }
    }
    let sample_f1 = sample_sum / n_docs as f64;
    let micro_f1 = eval::f1_from_counts(tp, fp, fn_);

    let all: Vec<&DocEstimate> = evaluation.estimates.iter().collect();
    let pooled = sweep_of(&all, &settings.thresholds)?;
    let mut by_fold = Vec::with_capacity(protocol.folds.len());
    for data in &protocol.folds {
        let fold_estimates: Vec<&DocEstimate> = evaluation
            .estimates
            .iter()
            .filter(|e| e.fold == data.fold)
            .collect();
        by_fold.push(sweep_of(&fold_estimates, &settings.thresholds)?);
    }

    Ok(ExperimentReport {
        mask,
        folds: evaluation.folds,
        rho_mean: evaluation.rho_mean,
        rho_sd: evaluation.rho_sd,
        mse_mean: evaluation.mse_mean,
        mse_sd: evaluation.mse_sd,
        classifier_trainings: protocol.classifier_trainings,
        sample_f1,
        micro_f1,
        estimates: evaluation.estimates,
        sweep: pooled,
        sweep_by_fold: by_fold,
    })
}
