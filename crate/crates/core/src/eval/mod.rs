//! Evaluation: document-level metrics, threshold sweeps, the nested
//! cross-validation protocol and feature-group ablation.

mod ablation;
mod experiment;
mod sweep;

pub use ablation::{run_ablation, AblationReport, AblationRow};
pub use experiment::{
    apply_bundle, run_experiment, run_protocol, train_bundle, DocEstimate, ExperimentReport,
    ExperimentSettings, FoldMetrics, ProtocolOutput,
};
pub use sweep::{default_threshold_grid, threshold_sweep, SweepRow};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Document-level recall: the fraction of gold concepts recovered.
/// Undefined on an empty gold set; such documents are excluded from recall
/// aggregates and their count is reported.
pub fn doc_recall(gold: &BTreeSet<u32>, predicted: &BTreeSet<u32>) -> Option<f64> {
    if gold.is_empty() {
        return None;
    }
    let hits = gold.intersection(predicted).count();
    Some(hits as f64 / gold.len() as f64)
}

/// Document-level precision: the fraction of predicted concepts that are
/// gold. An empty prediction is vacuously precise (1.0).
pub fn doc_precision(gold: &BTreeSet<u32>, predicted: &BTreeSet<u32>) -> f64 {
    if predicted.is_empty() {
        return 1.0;
    }
    let hits = gold.intersection(predicted).count();
    hits as f64 / predicted.len() as f64
}

/// True-positive / false-positive / false-negative counts of one document.
pub fn doc_counts(gold: &BTreeSet<u32>, predicted: &BTreeSet<u32>) -> (usize, usize, usize) {
    let tp = gold.intersection(predicted).count();
    (tp, predicted.len() - tp, gold.len() - tp)
}

/// F1 from counts: 2tp / (2tp + fp + fn). The all-zero case (empty gold and
/// empty prediction) is vacuously perfect, which keeps the micro and sample
/// variants consistent on single-document collections.
pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Mean of per-document F1 scores.
pub fn sample_f1(golds: &[BTreeSet<u32>], predictions: &[BTreeSet<u32>]) -> Result<f64> {
    if golds.is_empty() || golds.len() != predictions.len() {
        return Err(Error::invalid(
            "sample f1 needs aligned, non-empty collections",
        ));
    }
    let total: f64 = golds
        .iter()
        .zip(predictions)
        .map(|(g, p)| {
            let (tp, fp, fn_) = doc_counts(g, p);
            f1_from_counts(tp, fp, fn_)
        })
        .sum();
    Ok(total / golds.len() as f64)
}

/// F1 of the summed TP/FP/FN counts over all documents.
pub fn micro_f1(golds: &[BTreeSet<u32>], predictions: &[BTreeSet<u32>]) -> Result<f64> {
    if golds.is_empty() || golds.len() != predictions.len() {
        return Err(Error::invalid(
            "micro f1 needs aligned, non-empty collections",
        ));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (g, p) in golds.iter().zip(predictions) {
        let (t, f, n) = doc_counts(g, p);
        tp += t;
        fp += f;
        fn_ += n;
    }
    Ok(f1_from_counts(tp, fp, fn_))
}

/// Pearson product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "correlation over mismatched lengths ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least 2 points"));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::invalid("correlation undefined for constant input"));
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Mean squared error between predictions and truths.
pub fn mse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::invalid(format!(
            "mse over mismatched lengths ({} vs {})",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("mse over an empty collection"));
    }
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / predictions.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u32]) -> BTreeSet<u32> {
        ids.iter().copied().collect()
    }

    #[test]
    fn recall_and_precision_basics() {
        let gold = set(&[1, 2, 3, 4]);
        let predicted = set(&[1, 2]);
        assert_eq!(doc_recall(&gold, &predicted), Some(0.5));
        assert_eq!(doc_precision(&gold, &predicted), 1.0);
    }

    #[test]
    fn empty_prediction_has_vacuous_precision() {
        let gold = set(&[1, 2]);
        assert_eq!(doc_precision(&gold, &set(&[])), 1.0);
        assert_eq!(doc_recall(&gold, &set(&[])), Some(0.0));
    }

    #[test]
    fn exact_match_scores_one() {
        let s = set(&[4, 9]);
        assert_eq!(doc_recall(&s, &s), Some(1.0));
        assert_eq!(doc_precision(&s, &s), 1.0);
    }

    #[test]
    fn empty_gold_recall_is_excluded() {
        assert_eq!(doc_recall(&set(&[]), &set(&[1])), None);
    }

    #[test]
    fn f1_exact_predictions_scores_one() {
        let golds = vec![set(&[1, 2]), set(&[3])];
        assert_eq!(sample_f1(&golds, &golds).unwrap(), 1.0);
        assert_eq!(micro_f1(&golds, &golds).unwrap(), 1.0);
    }

    #[test]
    fn f1_single_document_sample_equals_micro() {
        let gold = vec![set(&[1, 2])];
        let predicted = vec![set(&[2, 3])];
        let s = sample_f1(&gold, &predicted).unwrap();
        let m = micro_f1(&gold, &predicted).unwrap();
        assert_eq!(s, 0.5);
        assert_eq!(m, 0.5);
    }

    #[test]
    fn micro_f1_sums_counts() {
        // Doc 1: tp=1 fp=1 fn=0; doc 2: tp=0 fp=0 fn=2.
        let golds = vec![set(&[1]), set(&[5, 6])];
        let predicted = vec![set(&[1, 2]), set(&[])];
        let m = micro_f1(&golds, &predicted).unwrap();
        assert!((m - 0.4).abs() < 1e-12, "micro f1 {m}");
    }

    #[test]
    fn pearson_perfect_and_reversed() {
        let x = vec![1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!((pearson(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_known_value() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![1.0, 3.0, 2.0, 4.0];
        assert!((pearson(&x, &y).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate_input() {
        assert!(pearson(&[1.0], &[2.0]).is_err());
        assert!(pearson(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[3.0]).is_err());
    }

    #[test]
    fn mse_values() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(mse(&[], &[]).is_err());
        assert!(mse(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mean_sd_is_population_sd() {
        let (m, s) = mean_sd(&[2.0, 4.0]);
        assert_eq!(m, 3.0);
        assert_eq!(s, 1.0);
    }
}
