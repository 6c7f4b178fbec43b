//! Threshold sweeps over estimated recall: for each threshold, the selected
//! subset's coverage, mean true recall and precision, and the relative
//! recall gain against the full collection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a sweep table. `mean_recall` averages only documents with a
/// defined recall (non-empty gold); rows whose selection contains none are
/// reported as `None`, as are rows with an empty selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub coverage: f64,
    pub mean_recall: Option<f64>,
    pub mean_precision: Option<f64>,
    pub recall_gain: Option<f64>,
    pub n_selected: usize,
}

/// Sweep ascending thresholds over per-document estimates. `recalls[i]` is
/// `None` for documents excluded from recall aggregates (empty gold set).
pub fn threshold_sweep(
    estimates: &[f64],
    recalls: &[Option<f64>],
    precisions: &[f64],
    thresholds: &[f64],
) -> Result<Vec<SweepRow>> {
    let n = estimates.len();
    if n == 0 {
        return Err(Error::invalid("sweep over an empty collection"));
    }
    if recalls.len() != n || precisions.len() != n {
        return Err(Error::invalid("sweep inputs must be aligned"));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("thresholds must be sorted ascending"));
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::invalid("thresholds must lie in [0, 1]"));
    }
    let full_recalls: Vec<f64> = recalls.iter().filter_map(|r| *r).collect();
    if full_recalls.is_empty() {
        return Err(Error::invalid("no document has a defined recall"));
    }
    let full_mean_recall = full_recalls.iter().sum::<f64>() / full_recalls.len() as f64;

    let mut rows = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let selected: Vec<usize> = (0..n).filter(|&i| estimates[i] >= t).collect();
        let n_selected = selected.len();
        let coverage = n_selected as f64 / n as f64;

        let sel_recalls: Vec<f64> = selected.iter().filter_map(|&i| recalls[i]).collect();
        let mean_recall = if sel_recalls.is_empty() {
            None
        } else {
            Some(sel_recalls.iter().sum::<f64>() / sel_recalls.len() as f64)
        };
        let mean_precision = if n_selected == 0 {
            None
        } else {
            Some(selected.iter().map(|&i| precisions[i]).sum::<f64>() / n_selected as f64)
        };
        let recall_gain = mean_recall.and_then(|m| {
            (full_mean_recall > 0.0).then(|| (m - full_mean_recall) / full_mean_recall)
        });
        rows.push(SweepRow {
            threshold: t,
            coverage,
            mean_recall,
            mean_precision,
            recall_gain,
            n_selected,
        });
    }
    Ok(rows)
}

/// The default threshold grid: 0.0 to 1.0 in steps of 0.05.
pub fn default_threshold_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_threshold_selects_everything_with_zero_gain() {
        let est = vec![0.2, 0.4, 0.6, 0.8];
        let rec: Vec<Option<f64>> = vec![Some(0.2), Some(0.4), Some(0.6), Some(0.8)];
        let prec = vec![1.0; 4];
        let rows = threshold_sweep(&est, &rec, &prec, &[0.0]).unwrap();
        assert_eq!(rows[0].coverage, 1.0);
        assert_eq!(rows[0].recall_gain, Some(0.0));
        assert_eq!(rows[0].n_selected, 4);
    }

    #[test]
    fn coverage_and_gain_at_half_threshold() {
        let est = vec![0.2, 0.4, 0.6, 0.8];
        let rec: Vec<Option<f64>> = vec![Some(0.2), Some(0.4), Some(0.6), Some(0.8)];
        let prec = vec![1.0; 4];
        let rows = threshold_sweep(&est, &rec, &prec, &[0.5]).unwrap();
        assert_eq!(rows[0].coverage, 0.5);
        let mean = rows[0].mean_recall.unwrap();
        assert!((mean - 0.7).abs() < 1e-12);
        let rg = rows[0].recall_gain.unwrap();
        assert!((rg - 0.4).abs() < 1e-12);
    }

    #[test]
    fn coverage_is_non_increasing() {
        let est = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        let rec: Vec<Option<f64>> = est.iter().map(|&e| Some(e)).collect();
        let prec = vec![0.9; 5];
        let grid = default_threshold_grid();
        let rows = threshold_sweep(&est, &rec, &prec, &grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].coverage <= w[0].coverage);
        }
    }

    #[test]
    fn empty_selection_reports_none() {
        let est = vec![0.1, 0.2];
        let rec = vec![Some(0.5), Some(0.6)];
        let prec = vec![1.0, 1.0];
        let rows = threshold_sweep(&est, &rec, &prec, &[0.9]).unwrap();
        assert_eq!(rows[0].n_selected, 0);
        assert_eq!(rows[0].mean_recall, None);
        assert_eq!(rows[0].mean_precision, None);
        assert_eq!(rows[0].recall_gain, None);
    }

    #[test]
    fn empty_gold_documents_count_for_coverage_not_recall() {
        let est = vec![0.9, 0.9];
        let rec = vec![Some(0.5), None];
        let prec = vec![1.0, 1.0];
        let rows = threshold_sweep(&est, &rec, &prec, &[0.5]).unwrap();
        assert_eq!(rows[0].coverage, 1.0);
        assert_eq!(rows[0].mean_recall, Some(0.5));
    }

    #[test]
    fn unsorted_thresholds_are_rejected() {
        let est = vec![0.5];
        let rec = vec![Some(0.5)];
        let prec = vec![1.0];
        assert!(threshold_sweep(&est, &rec, &prec, &[0.5, 0.1]).is_err());
        assert!(threshold_sweep(&[], &[], &[], &[0.1]).is_err());
    }
}
