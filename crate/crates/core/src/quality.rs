//! Document-level quality estimation.
//!
//! Reliability-indicator features come in four groups:
//!
//! - **V** (volume): character and token counts of the title.
//! - **C** (content): binary indicators over a capped list of quality terms,
//!   plus the out-of-vocabulary token count.
//! - **LC** (label calibration): per category, the calibrated expected
//!   concept count, the actually assigned count, and their signed and
//!   absolute differences; plus the same four totals over all categories.
//! - **PI** (confidence): mean, product, median and minimum of the assigned
//!   concepts' confidences, with the assignment size as companion.
//!
//! A multi-output regressor estimates expected concept counts per category
//! from V + term indicators (label calibration); a second regressor maps the
//! feature groups to estimated document-level recall. Precision is scored
//! directly from confidence aggregations, without a trained model.
//!
//! Sentinels are asymmetric on purpose: an empty assignment yields PI
//! features of 0.0 (no evidence of recall) but precision scores of 1.0 (no
//! assignment is incorrect).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::mlc::Prediction;
use crate::regress::{fit_multi_output, EnsembleModel, MultiOutputModel, RegressorSpec};
use crate::text::{count_oov, TermIndex, TokenSeq};

/// Which feature groups are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct GroupMask {
    pub volume: bool,
    pub content: bool,
    pub calibration: bool,
    pub confidence: bool,
}

impl GroupMask {
    pub fn all() -> Self {
        GroupMask {
            volume: true,
            content: true,
            calibration: true,
            confidence: true,
        }
    }

    pub fn none() -> Self {
        GroupMask {
            volume: false,
            content: false,
            calibration: false,
            confidence: false,
        }
    }

    pub fn label(&self) -> String {
        let names: Vec<&str> = self
            .groups()
            .iter()
            .zip(["V", "C", "LC", "PI"])
            .filter(|&(&on, _)| on)
            .map(|(_, name)| name)
            .collect();
        if names.is_empty() {
            "none".to_string()
        } else {
            names.join("+")
        }
    }

    fn groups(&self) -> [bool; 4] {
        [self.volume, self.content, self.calibration, self.confidence]
    }

    pub fn any(&self) -> bool {
        self.groups().iter().any(|&g| g)
    }
}

impl TryFrom<Vec<String>> for GroupMask {
    type Error = String;

    fn try_from(names: Vec<String>) -> std::result::Result<Self, String> {
        let mut mask = GroupMask::none();
        for name in names {
            match name.as_str() {
                "V" => mask.volume = true,
                "C" => mask.content = true,
                "LC" => mask.calibration = true,
                "PI" => mask.confidence = true,
                other => return Err(format!("unknown feature group \"{other}\"")),
            }
        }
        Ok(mask)
    }
}

impl From<GroupMask> for Vec<String> {
    fn from(mask: GroupMask) -> Vec<String> {
        mask.groups()
            .iter()
            .zip(["V", "C", "LC", "PI"])
            .filter(|&(&on, _)| on)
            .map(|(_, name)| name.to_string())
            .collect()
    }
}

/// Column layout of the full (unmasked) feature row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub n_categories: usize,
    pub n_quality_terms: usize,
}

impl FeatureLayout {
    pub fn volume_width(&self) -> usize {
        2
    }

    pub fn content_width(&self) -> usize {
        self.n_quality_terms + 1
    }

    pub fn calibration_width(&self) -> usize {
        4 * self.n_categories + 4
    }

    pub fn confidence_width(&self) -> usize {
        5
    }

    pub fn full_width(&self) -> usize {
        self.volume_width()
            + self.content_width()
            + self.calibration_width()
            + self.confidence_width()
    }

    pub fn masked_width(&self, mask: GroupMask) -> usize {
        let mut w = 0;
        if mask.volume {
            w += self.volume_width();
        }
        if mask.content {
            w += self.content_width();
        }
        if mask.calibration {
            w += self.calibration_width();
        }
        if mask.confidence {
            w += self.confidence_width();
        }
        w
    }

    /// Keep only the columns of active groups; masked-out groups contribute
    /// no columns at all.
    pub fn project(&self, mask: GroupMask, full: &[f64]) -> Vec<f64> {
        debug_assert_eq!(full.len(), self.full_width());
        let mut out = Vec::with_capacity(self.masked_width(mask));
        let mut at = 0;
        for (active, width) in [
            (mask.volume, self.volume_width()),
            (mask.content, self.content_width()),
            (mask.calibration, self.calibration_width()),
            (mask.confidence, self.confidence_width()),
        ] {
            if active {
                out.extend_from_slice(&full[at..at + width]);
            }
            at += width;
        }
        out
    }
}

/// A masked feature row for one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub mask: GroupMask,
}

/// Extracts reliability features for one document.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    quality_terms: Vec<String>,
    term_columns: HashMap<String, usize>,
    layout: FeatureLayout,
    mask: GroupMask,
}

impl FeatureExtractor {
    pub fn new(quality_terms: Vec<String>, n_categories: usize, mask: GroupMask) -> Self {
        let term_columns = quality_terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let layout = FeatureLayout {
            n_categories,
            n_quality_terms: quality_terms.len(),
        };
        FeatureExtractor {
            quality_terms,
            term_columns,
            layout,
            mask,
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn mask(&self) -> GroupMask {
        self.mask
    }

    pub fn quality_terms(&self) -> &[String] {
        &self.quality_terms
    }

    /// The full (unmasked) feature row. `calibrated` holds the expected
    /// concept count per category, aligned with the vocabulary's categories.
    pub fn extract_full(
        &self,
        doc: &TokenSeq,
        pred: &Prediction,
        calibrated: &[f64],
        index: &TermIndex,
        vocabulary: &Vocabulary,
    ) -> Result<Vec<f64>> {
        if calibrated.len() != self.layout.n_categories {
            return Err(Error::invalid(format!(
                "{} calibrated counts but layout has {} categories",
                calibrated.len(),
                self.layout.n_categories
            )));
        }
        if vocabulary.n_categories() != self.layout.n_categories {
            return Err(Error::invalid(
                "vocabulary categories do not match the feature layout",
            ));
        }
        for &(_, pi) in pred.assigned() {
            if !(pi > 0.0 && pi < 1.0) {
                return Err(Error::invalid(format!("confidence {pi} outside (0, 1)")));
            }
        }
        let mut row = Vec::with_capacity(self.layout.full_width());

        // V: volume.
        row.push(doc.char_count as f64);
        row.push(doc.token_count() as f64);

        // C: term indicators over the capped quality-term list, then OOV.
        let mut indicators = vec![0.0; self.quality_terms.len()];
        for tok in &doc.tokens {
            if let Some(&col) = self.term_columns.get(tok) {
                indicators[col] = 1.0;
            }
        }
        row.extend_from_slice(&indicators);
        row.push(count_oov(doc, index) as f64);

        // LC: calibrated vs assigned counts, per category and total.
        let assigned_counts = pred.counts_per_category(vocabulary);
        for k in 0..self.layout.n_categories {
            let diff = calibrated[k] - assigned_counts[k];
            row.push(calibrated[k]);
            row.push(assigned_counts[k]);
            row.push(diff);
            row.push(diff.abs());
        }
        let calib_total: f64 = calibrated.iter().sum();
        let assigned_total = pred.len() as f64;
        let total_diff = calib_total - assigned_total;
        row.push(calib_total);
        row.push(assigned_total);
        row.push(total_diff);
        row.push(total_diff.abs());

        // PI: confidence aggregations with the assignment size.
        let agg = confidence_aggregates(pred);
        row.push(agg.mean);
        row.push(agg.product);
        row.push(agg.median);
        row.push(agg.min);
        row.push(pred.len() as f64);

        debug_assert_eq!(row.len(), self.layout.full_width());
        Ok(row)
    }

    /// The masked feature vector used by the recall estimator.
    pub fn extract(
        &self,
        doc: &TokenSeq,
        pred: &Prediction,
        calibrated: &[f64],
        index: &TermIndex,
        vocabulary: &Vocabulary,
    ) -> Result<FeatureVector> {
        let full = self.extract_full(doc, pred, calibrated, index, vocabulary)?;
        Ok(FeatureVector {
            values: self.layout.project(self.mask, &full),
            mask: self.mask,
        })
    }

    /// Feature row for label calibration: volume features plus the term
    /// indicators (no OOV count, no prediction-derived columns).
    pub fn calibration_row(&self, doc: &TokenSeq) -> Vec<f64> {
        let mut row = Vec::with_capacity(2 + self.quality_terms.len());
        row.push(doc.char_count as f64);
        row.push(doc.token_count() as f64);
        let mut indicators = vec![0.0; self.quality_terms.len()];
        for tok in &doc.tokens {
            if let Some(&col) = self.term_columns.get(tok) {
                indicators[col] = 1.0;
            }
        }
        row.extend_from_slice(&indicators);
        row
    }
}

struct ConfidenceAggregates {
    mean: f64,
    product: f64,
    median: f64,
    min: f64,
}

fn confidence_aggregates(pred: &Prediction) -> ConfidenceAggregates {
    if pred.is_empty() {
        return ConfidenceAggregates {
            mean: 0.0,
            product: 0.0,
            median: 0.0,
            min: 0.0,
        };
    }
    let mut values: Vec<f64> = pred.assigned().iter().map(|&(_, pi)| pi).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let product = values.iter().product();
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    };
    ConfidenceAggregates {
        mean,
        product,
        median,
        min: values[0],
    }
}

/// Document-level precision scores: aggregations of the assigned concepts'
/// confidences. An empty assignment scores 1.0 (nothing assigned is wrong).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionScores {
    pub mean: f64,
    pub product: f64,
    pub median: f64,
    pub min: f64,
}

pub fn precision_scores(pred: &Prediction) -> PrecisionScores {
    if pred.is_empty() {
        return PrecisionScores {
            mean: 1.0,
            product: 1.0,
            median: 1.0,
            min: 1.0,
        };
    }
    let agg = confidence_aggregates(pred);
    PrecisionScores {
        mean: agg.mean,
        product: agg.product,
        median: agg.median,
        min: agg.min,
    }
}

/// Multi-output regressor estimating the expected number of concepts per
/// category from title features.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationModel {
    quality_terms: Vec<String>,
    model: MultiOutputModel,
}

impl CalibrationModel {
    /// Expected concept counts per category, clamped at zero. Real-valued on
    /// purpose; differences against assigned counts stay fractional.
    pub fn predict(&self, doc: &TokenSeq) -> Vec<f64> {
        let extractor = FeatureExtractor::new(
            self.quality_terms.clone(),
            self.model.n_outputs(),
            GroupMask::all(),
        );
        let row = extractor.calibration_row(doc);
        self.model
            .predict(&row)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect()
    }

    pub fn n_categories(&self) -> usize {
        self.model.n_outputs()
    }

    pub fn quality_terms(&self) -> &[String] {
        &self.quality_terms
    }
}

/// Train label calibration on (tokenized title, gold count per category)
/// pairs.
pub fn train_calibration(
    docs: &[TokenSeq],
    gold_counts: &[Vec<f64>],
    categories: &[String],
    quality_terms: Vec<String>,
    learner: &RegressorSpec,
    seed: u64,
) -> Result<CalibrationModel> {
    if docs.is_empty() {
        return Err(Error::invalid("calibration training slice is empty"));
    }
    if docs.len() != gold_counts.len() {
        return Err(Error::invalid(format!(
            "{} documents but {} count rows",
            docs.len(),
            gold_counts.len()
        )));
    }
    let extractor =
        FeatureExtractor::new(quality_terms.clone(), categories.len(), GroupMask::all());
    let rows: Vec<Vec<f64>> = docs.iter().map(|d| extractor.calibration_row(d)).collect();
    let mut columns = vec![Vec::with_capacity(docs.len()); categories.len()];
    for counts in gold_counts {
        if counts.len() != categories.len() {
            return Err(Error::invalid(
                "gold count row does not match the category list",
            ));
        }
        for (k, &v) in counts.iter().enumerate() {
            columns[k].push(v);
        }
    }
    let model = fit_multi_output(learner, &rows, &columns, categories, seed)?;
    Ok(CalibrationModel {
        quality_terms,
        model,
    })
}

/// Regressor from masked feature vectors to estimated document recall.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecallEstimator {
    model: EnsembleModel,
    mask: GroupMask,
    layout: FeatureLayout,
}

impl RecallEstimator {
    pub fn mask(&self) -> GroupMask {
        self.mask
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    /// Estimated recall, clamped into [0, 1].
    pub fn estimate(&self, fv: &FeatureVector) -> Result<f64> {
        if fv.mask != self.mask {
            return Err(Error::invalid(format!(
                "feature mask {} does not match estimator mask {}",
                fv.mask.label(),
                self.mask.label()
            )));
        }
        if fv.values.len() != self.layout.masked_width(self.mask) {
            return Err(Error::invalid(
                "feature vector width does not match the estimator",
            ));
        }
        Ok(self.model.predict(&fv.values).clamp(0.0, 1.0))
    }

    /// Estimate from a full (unmasked) feature row.
    pub fn estimate_full(&self, full_row: &[f64]) -> Result<f64> {
        if full_row.len() != self.layout.full_width() {
            return Err(Error::invalid("full feature row does not match the layout"));
        }
        let masked = self.layout.project(self.mask, full_row);
        Ok(self.model.predict(&masked).clamp(0.0, 1.0))
    }
}

/// Train the recall estimator on full feature rows paired with true
/// document-level recall; only the columns of `mask` are used.
pub fn train_recall_estimator(
    full_rows: &[Vec<f64>],
    recalls: &[f64],
    layout: FeatureLayout,
    mask: GroupMask,
    learner: &RegressorSpec,
    seed: u64,
) -> Result<RecallEstimator> {
    if full_rows.len() < 2 {
        return Err(Error::invalid("recall estimation needs at least 2 rows"));
    }
    if full_rows.len() != recalls.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} recall targets",
            full_rows.len(),
            recalls.len()
        )));
    }
    if !mask.any() {
        return Err(Error::invalid(
            "recall estimation needs at least one active feature group",
        ));
    }
    if recalls.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::invalid("recall targets must lie in [0, 1]"));
    }
    let rows: Vec<Vec<f64>> = full_rows.iter().map(|r| layout.project(mask, r)).collect();
    let model = learner.fit(&rows, recalls, seed)?;
    Ok(RecallEstimator {
        model,
        mask,
        layout,
    })
}

/// Quality estimate of one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityEstimate {
    pub doc_id: String,
    pub recall_hat: f64,
    pub precision: PrecisionScores,
}

/// Documents whose estimated recall passes the threshold, in input order.
pub fn gate(estimates: &[QualityEstimate], threshold: f64) -> Result<Vec<String>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "gate threshold {threshold} outside [0, 1]"
        )));
    }
    Ok(estimates
        .iter()
        .filter(|e| e.recall_hat >= threshold)
        .map(|e| e.doc_id.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn pred(confidences: &[f64]) -> Prediction {
        Prediction::new(
            "d".to_string(),
            confidences
                .iter()
                .enumerate()
                .map(|(i, &pi)| (i as u32, pi))
                .collect(),
        )
    }

    #[test]
    fn precision_scores_arithmetic() {
        let p = precision_scores(&pred(&[0.9, 0.8]));
        assert!((p.mean - 0.85).abs() < 1e-12);
        assert!((p.product - 0.72).abs() < 1e-12);
        assert!((p.median - 0.85).abs() < 1e-12);
        assert_eq!(p.min, 0.8);
    }

    #[test]
    fn precision_scores_single_confidence() {
        let p = precision_scores(&pred(&[0.98]));
        assert_eq!(p.mean, 0.98);
        assert_eq!(p.product, 0.98);
        assert_eq!(p.median, 0.98);
        assert_eq!(p.min, 0.98);
    }

    #[test]
    fn precision_scores_empty_assignment_is_vacuously_one() {
        let p = precision_scores(&pred(&[]));
        assert_eq!(
            p,
            PrecisionScores {
                mean: 1.0,
                product: 1.0,
                median: 1.0,
                min: 1.0
            }
        );
    }

    fn vocab2() -> Vocabulary {
        Vocabulary::from_rows(vec![
            ("G1", "g1", "geo"),
            ("G2", "g2", "geo"),
            ("E1", "e1", "econ"),
        ])
        .unwrap()
    }

    fn extractor(mask: GroupMask) -> FeatureExtractor {
        FeatureExtractor::new(vec!["law".into(), "tax".into()], 2, mask)
    }

    fn toy_index() -> TermIndex {
        TermIndex::build(&[tokenize("law tax oil")], 1, 10).unwrap()
    }

    #[test]
    fn extract_populates_all_groups() {
        let ex = extractor(GroupMask::all());
        let index = toy_index();
        let vocab = vocab2();
        let doc = tokenize("brexit law");
        // One assigned concept (E1, econ) at 0.98; calibration expects 2.7 geo.
        let p = Prediction::new("d".into(), vec![(2, 0.98)]);
        let full = ex
            .extract_full(&doc, &p, &[2.7, 1.0], &index, &vocab)
            .unwrap();
        let layout = ex.layout();
        assert_eq!(full.len(), layout.full_width());
        // V: 10 chars ("brexit law"), 2 tokens.
        assert_eq!(&full[0..2], &[10.0, 2.0]);
        // C: "law" present, "tax" absent, 1 OOV occurrence ("brexit").
        assert_eq!(&full[2..5], &[1.0, 0.0, 1.0]);
        // LC geo: calibrated 2.7, assigned 0 -> diff 2.7, abs 2.7.
        assert_eq!(&full[5..9], &[2.7, 0.0, 2.7, 2.7]);
        // LC econ: calibrated 1.0, assigned 1.
        assert_eq!(&full[9..13], &[1.0, 1.0, 0.0, 0.0]);
        // LC totals: 3.7 expected vs 1 assigned; the gap carries the usual
        // last-bit rounding of the 2.7 + 1.0 total accumulation.
        #[allow(clippy::excessive_precision)]
        let expected_totals = [3.7, 1.0, 2.700_000_000_000_000_2, 2.700_000_000_000_000_2];
        assert_eq!(&full[13..17], &expected_totals);
        // PI: all aggregates at 0.98, one assignment.
        assert_eq!(&full[17..22], &[0.98, 0.98, 0.98, 0.98, 1.0]);
    }

    #[test]
    fn extract_empty_assignment_uses_zero_sentinels() {
        let ex = extractor(GroupMask::all());
        let full = ex
            .extract_full(
                &tokenize("law"),
                &pred(&[]),
                &[0.0, 0.0],
                &toy_index(),
                &vocab2(),
            )
            .unwrap();
        let w = ex.layout().full_width();
        assert_eq!(&full[w - 5..], &[0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn extract_rejects_out_of_range_confidence() {
        let ex = extractor(GroupMask::all());
        let bad = Prediction::new("d".into(), vec![(0, 1.0)]);
        let err = ex.extract_full(&tokenize("law"), &bad, &[0.0, 0.0], &toy_index(), &vocab2());
        assert!(err.is_err());
    }

    #[test]
    fn masked_groups_contribute_no_columns() {
        let mask = GroupMask {
            volume: true,
            content: false,
            calibration: false,
            confidence: true,
        };
        let ex = extractor(mask);
        let fv = ex
            .extract(
                &tokenize("law tax"),
                &pred(&[0.6]),
                &[1.0, 0.5],
                &toy_index(),
                &vocab2(),
            )
            .unwrap();
        assert_eq!(fv.values.len(), 2 + 5);
    }

    #[test]
    fn masked_extraction_matches_projection_of_full() {
        let mask = GroupMask {
            volume: false,
            content: true,
            calibration: true,
            confidence: false,
        };
        let ex_masked = extractor(mask);
        let ex_full = extractor(GroupMask::all());
        let (doc, p, calib) = (tokenize("tax law brexit"), pred(&[0.7, 0.6]), [1.5, 0.25]);
        let full = ex_full
            .extract_full(&doc, &p, &calib, &toy_index(), &vocab2())
            .unwrap();
        let fv = ex_masked
            .extract(&doc, &p, &calib, &toy_index(), &vocab2())
            .unwrap();
        assert_eq!(fv.values, ex_masked.layout().project(mask, &full));
    }

    #[test]
    fn with_calibration_masked_out_calib_inputs_are_irrelevant() {
        let mask = GroupMask {
            volume: true,
            content: true,
            calibration: false,
            confidence: true,
        };
        let ex = extractor(mask);
        let (doc, p) = (tokenize("tax oil"), pred(&[0.8]));
        let a = ex
            .extract(&doc, &p, &[0.0, 0.0], &toy_index(), &vocab2())
            .unwrap();
        let b = ex
            .extract(&doc, &p, &[9.0, 4.5], &toy_index(), &vocab2())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pi_ordering_invariant_on_nonempty_assignments() {
        for confs in [vec![0.3, 0.9, 0.5], vec![0.98], vec![0.5, 0.5, 0.6, 0.7]] {
            let agg = confidence_aggregates(&pred(&confs));
            assert!(agg.product <= agg.min + 1e-15);
            assert!(agg.min <= agg.median);
            assert!(agg.product <= agg.mean + 1e-15);
        }
    }

    #[test]
    fn calibration_learns_a_count_rule() {
        // Gold geo count equals the number of gazetteer tokens in the title.
        let gazetteer = ["france", "spain", "italy", "japan"];
        let mut docs = Vec::new();
        let mut counts = Vec::new();
        for i in 0..60 {
            let k = i % 4;
            let mut title = String::from("study of trade");
            for g in gazetteer.iter().take(k) {
                title.push(' ');
                title.push_str(g);
            }
            docs.push(tokenize(&title));
            counts.push(vec![k as f64]);
        }
        let mut terms: Vec<String> = gazetteer.iter().map(|s| s.to_string()).collect();
        terms.extend(["study".into(), "of".into(), "trade".into()]);
        let model = train_calibration(
            &docs[..40],
            &counts[..40],
            &["geo".to_string()],
            terms,
            &RegressorSpec::default_gradient_boosting(),
            3,
        )
        .unwrap();
        // Held-out correlation between predicted and true counts.
        let predicted: Vec<f64> = docs[40..].iter().map(|d| model.predict(d)[0]).collect();
        let truth: Vec<f64> = counts[40..].iter().map(|c| c[0]).collect();
        let rho = crate::eval::pearson(&predicted, &truth).unwrap();
        assert!(rho > 0.8, "held-out correlation {rho} too low");
        // A three-name title against an empty assignment leaves a gap near 3.
        let probe = model.predict(&tokenize("study of trade france spain italy"));
        assert!(
            (probe[0] - 3.0).abs() < 1.0,
            "expected ~3 geo concepts, got {}",
            probe[0]
        );
    }

    #[test]
    fn calibration_constant_targets_predict_the_constant() {
        let docs: Vec<TokenSeq> = (0..10).map(|i| tokenize(&format!("title {i}"))).collect();
        let zero = vec![vec![0.0, 2.0]; 10];
        let model = train_calibration(
            &docs,
            &zero,
            &["a".to_string(), "b".to_string()],
            vec!["title".into()],
            &RegressorSpec::default_gradient_boosting(),
            1,
        )
        .unwrap();
        let out = model.predict(&tokenize("anything"));
        assert_eq!(out, vec![0.0, 2.0]);
    }

    #[test]
    fn calibration_is_deterministic() {
        let docs: Vec<TokenSeq> = (0..12)
            .map(|i| tokenize(&format!("t{} x", i % 3)))
            .collect();
        let counts: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 3) as f64]).collect();
        let spec = RegressorSpec::default_extra_trees();
        let a = train_calibration(
            &docs,
            &counts,
            &["k".to_string()],
            vec!["x".into()],
            &spec,
            5,
        )
        .unwrap();
        let b = train_calibration(
            &docs,
            &counts,
            &["k".to_string()],
            vec!["x".into()],
            &spec,
            5,
        )
        .unwrap();
        assert_eq!(a.predict(&docs[0]), b.predict(&docs[0]));
    }

    fn layout2() -> FeatureLayout {
        FeatureLayout {
            n_categories: 2,
            n_quality_terms: 2,
        }
    }

    fn synthetic_rows(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        // Recall determined linearly by the OOV count (column 4 of the full
        // layout: V(2) + terms(2) then oov).
        let layout = layout2();
        let mut rows = Vec::new();
        let mut recalls = Vec::new();
        for i in 0..n {
            let oov = (i % 5) as f64;
            let mut row = vec![0.0; layout.full_width()];
            row[0] = 20.0 + i as f64;
            row[1] = 4.0;
            row[4] = oov;
            rows.push(row);
            recalls.push(1.0 - oov * 0.2);
        }
        (rows, recalls)
    }

    #[test]
    fn recall_estimator_learns_a_linear_rule() {
        let (rows, recalls) = synthetic_rows(50);
        let est = train_recall_estimator(
            &rows[..40],
            &recalls[..40],
            layout2(),
            GroupMask::all(),
            &RegressorSpec::Linear,
            0,
        )
        .unwrap();
        let predicted: Vec<f64> = rows[40..]
            .iter()
            .map(|r| est.estimate_full(r).unwrap())
            .collect();
        let rho = crate::eval::pearson(&predicted, &recalls[40..]).unwrap();
        assert!(rho > 0.99, "rho {rho}");
    }

    #[test]
    fn recall_estimates_are_clamped() {
        // Linear extrapolation beyond the training range exceeds [0, 1].
        let (rows, recalls) = synthetic_rows(20);
        let est = train_recall_estimator(
            &rows,
            &recalls,
            layout2(),
            GroupMask::all(),
            &RegressorSpec::Linear,
            0,
        )
        .unwrap();
        let mut high = rows[0].clone();
        high[4] = -50.0; // raw output far above 1
        let mut low = rows[0].clone();
        low[4] = 50.0; // raw output far below 0
        assert_eq!(est.estimate_full(&high).unwrap(), 1.0);
        assert_eq!(est.estimate_full(&low).unwrap(), 0.0);
    }

    #[test]
    fn recall_estimator_constant_targets() {
        let (rows, _) = synthetic_rows(10);
        let est = train_recall_estimator(
            &rows,
            &[1.0; 10],
            layout2(),
            GroupMask::all(),
            &RegressorSpec::default_gradient_boosting(),
            0,
        )
        .unwrap();
        for r in &rows {
            assert_eq!(est.estimate_full(r).unwrap(), 1.0);
        }
    }

    #[test]
    fn estimator_training_is_deterministic() {
        let (rows, recalls) = synthetic_rows(30);
        let spec = RegressorSpec::default_gradient_boosting();
        let a =
            train_recall_estimator(&rows, &recalls, layout2(), GroupMask::all(), &spec, 9).unwrap();
        let b =
            train_recall_estimator(&rows, &recalls, layout2(), GroupMask::all(), &spec, 9).unwrap();
        for r in &rows {
            assert_eq!(a.estimate_full(r).unwrap(), b.estimate_full(r).unwrap());
        }
    }

    #[test]
    fn estimator_rejects_mismatched_masks() {
        let (rows, recalls) = synthetic_rows(10);
        let mask = GroupMask {
            volume: true,
            content: false,
            calibration: false,
            confidence: false,
        };
        let est =
            train_recall_estimator(&rows, &recalls, layout2(), mask, &RegressorSpec::Linear, 0)
                .unwrap();
        let fv = FeatureVector {
            values: vec![0.0; 7],
            mask: GroupMask::all(),
        };
        assert!(est.estimate(&fv).is_err());
    }

    fn estimates(pairs: &[(&str, f64)]) -> Vec<QualityEstimate> {
        pairs
            .iter()
            .map(|&(id, r)| QualityEstimate {
                doc_id: id.to_string(),
                recall_hat: r,
                precision: PrecisionScores {
                    mean: 1.0,
                    product: 1.0,
                    median: 1.0,
                    min: 1.0,
                },
            })
            .collect()
    }

    #[test]
    fn gate_selects_by_threshold() {
        let es = estimates(&[("a", 0.2), ("b", 0.6)]);
        assert_eq!(gate(&es, 0.3).unwrap(), vec!["b".to_string()]);
        assert_eq!(gate(&es, 0.0).unwrap().len(), 2);
        let es2 = estimates(&[("a", 1.0), ("b", 0.999)]);
        assert_eq!(gate(&es2, 1.0).unwrap(), vec!["a".to_string()]);
    }

    #[test]
    fn gate_is_anti_monotone() {
        let es = estimates(&[("a", 0.1), ("b", 0.4), ("c", 0.7), ("d", 0.95)]);
        let loose: Vec<String> = gate(&es, 0.3).unwrap();
        let strict: Vec<String> = gate(&es, 0.8).unwrap();
        assert!(strict.iter().all(|id| loose.contains(id)));
        for t in [0.0, 0.3, 0.8] {
            for id in gate(&es, t).unwrap() {
                let e = es.iter().find(|e| e.doc_id == id).unwrap();
                assert!(e.recall_hat >= t);
            }
        }
    }

    #[test]
    fn gate_rejects_out_of_range_threshold() {
        assert!(gate(&[], 1.5).is_err());
    }

    #[test]
    fn group_mask_serde_round_trip() {
        let mask = GroupMask {
            volume: true,
            content: false,
            calibration: true,
            confidence: false,
        };
        let json = serde_json::to_string(&mask).unwrap();
        assert_eq!(json, "[\"V\",\"LC\"]");
        let back: GroupMask = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mask);
        assert!(serde_json::from_str::<GroupMask>("[\"Q\"]").is_err());
    }
}
