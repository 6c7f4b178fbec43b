//! AdaBoost.R2: boosting for regression by weighted resampling.
//!
//! Each stage fits a tree on a sample drawn with replacement according to
//! the current example weights, scores it by weighted relative loss, and
//! keeps it with confidence ln(1/beta). Boosting stops early when the
//! average loss reaches 0.5 or a stage fits the data perfectly. Prediction
//! is the weighted median of the learners' outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::tree::{RegressionTree, SplitContext, TreeParams};
use super::EnsembleModel;

/// Relative loss applied to per-example errors scaled into [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaLoss {
    Linear,
    Square,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub stages: usize,
    pub loss: AdaLoss,
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            stages: 50,
            loss: AdaLoss::Linear,
            tree: TreeParams::default(),
            seed: 0,
        }
    }
}

/// One member of the boosted ensemble with its median weight ln(1/beta).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaLearner {
    pub tree: RegressionTree,
    pub weight: f64,
}

/// Beta floor for perfect stages, giving weight ln(1e10).
const BETA_FLOOR: f64 = 1e-10;

pub fn fit_adaboost_r2(
    x: &[Vec<f64>],
    y: &[f64],
    params: &AdaBoostParams,
) -> Result<EnsembleModel> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if params.stages == 0 {
        return Err(Error::invalid("stages must be at least 1"));
    }
    let ctx = SplitContext::new(x)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("targets must be finite"));
    }
    let n = x.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut rng = Rng::from_seed(params.seed);
    let mut counts = vec![0u32; n];
    let mut learners: Vec<AdaLearner> = Vec::new();

    for _ in 0..params.stages {
        resample(&weights, &mut counts, &mut rng);
        let tree = ctx.fit(y, &counts, &params.tree)?;

        // Errors over the full original sample.
        let errors: Vec<f64> = x
            .iter()
            .zip(y)
            .map(|(row, &t)| (tree.predict(row) - t).abs())
            .collect();
        let max_err = errors.iter().cloned().fold(0.0, f64::max);
        if max_err <= 0.0 {
            learners.push(AdaLearner {
                tree,
                weight: (1.0 / BETA_FLOOR).ln(),
            });
            break;
        }
        let losses: Vec<f64> = errors
            .iter()
            .map(|e| {
                let r = e / max_err;
                match params.loss {
                    AdaLoss::Linear => r,
                    AdaLoss::Square => r * r,
                    AdaLoss::Exponential => 1.0 - (-r).exp(),
                }
            })
            .collect();
        let avg_loss: f64 = weights.iter().zip(&losses).map(|(w, l)| w * l).sum();
        if avg_loss >= 0.5 {
            if learners.is_empty() {
                // Keep the only learner so the model stays usable.
                learners.push(AdaLearner { tree, weight: 1.0 });
            }
            break;
        }
        let beta = (avg_loss / (1.0 - avg_loss)).max(BETA_FLOOR);
        learners.push(AdaLearner {
            tree,
            weight: (1.0 / beta).ln(),
        });

        for (w, l) in weights.iter_mut().zip(&losses) {
            *w *= beta.powf(1.0 - l);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(EnsembleModel::AdaBoostR2 { learners })
}

/// Draw n examples with replacement proportionally to `weights`.
fn resample(weights: &[f64], counts: &mut [u32], rng: &mut Rng) {
    let n = weights.len();
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    counts.iter_mut().for_each(|c| *c = 0);
    for _ in 0..n {
        let u = rng.next_f64() * total;
        // First index with cdf[i] > u.
        let idx = cdf.partition_point(|&c| c <= u).min(n - 1);
        counts[idx] += 1;
    }
}

/// Weighted median: the smallest prediction whose cumulative weight reaches
/// half of the total.
pub(crate) fn weighted_median(values: &mut [(f64, f64)]) -> f64 {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = values.iter().map(|&(_, w)| w).sum();
    let mut acc = 0.0;
    for &(v, w) in values.iter() {
        acc += w;
        if acc >= 0.5 * total {
            return v;
        }
    }
    values.last().map(|&(v, _)| v).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![
                vec![0.0],
                vec![1.0],
                vec![2.0],
                vec![3.0],
                vec![4.0],
                vec![5.0],
            ],
            vec![0.0, 0.5, 1.0, 5.0, 5.5, 6.0],
        )
    }

    #[test]
    fn single_stage_predicts_like_its_tree() {
        let (x, y) = toy();
        let params = AdaBoostParams {
            stages: 1,
            seed: 4,
            ..Default::default()
        };
        let m = fit_adaboost_r2(&x, &y, &params).unwrap();
        let EnsembleModel::AdaBoostR2 { learners } = &m else {
            panic!()
        };
        assert_eq!(learners.len(), 1);
        for probe in [vec![0.0], vec![2.5], vec![5.0]] {
            assert_eq!(m.predict(&probe), learners[0].tree.predict(&probe));
        }
    }

    #[test]
    fn weighted_median_of_equal_weights_is_the_median() {
        let mut vals = vec![(3.0, 1.0), (1.0, 1.0), (2.0, 1.0)];
        assert_eq!(weighted_median(&mut vals), 2.0);
    }

    #[test]
    fn heavy_weight_dominates_the_median() {
        let mut vals = vec![(1.0, 0.1), (2.0, 0.1), (9.0, 10.0)];
        assert_eq!(weighted_median(&mut vals), 9.0);
    }

    #[test]
    fn perfect_first_stage_stops_the_loop() {
        // Constant targets: any resample fits them exactly at stage 1.
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![2.5, 2.5, 2.5, 2.5];
        let params = AdaBoostParams {
            stages: 25,
            seed: 1,
            ..Default::default()
        };
        let m = fit_adaboost_r2(&x, &y, &params).unwrap();
        let EnsembleModel::AdaBoostR2 { learners } = &m else {
            panic!()
        };
        assert_eq!(learners.len(), 1);
        assert_eq!(m.predict(&[2.0]), 2.5);
    }

    #[test]
    fn prediction_lies_within_learner_outputs() {
        let (x, y) = toy();
        for loss in [AdaLoss::Linear, AdaLoss::Square, AdaLoss::Exponential] {
            let params = AdaBoostParams {
                stages: 10,
                loss,
                seed: 8,
                ..Default::default()
            };
            let m = fit_adaboost_r2(&x, &y, &params).unwrap();
            let EnsembleModel::AdaBoostR2 { learners } = &m else {
                panic!()
            };
            for probe in [vec![0.5], vec![3.3], vec![4.9]] {
                let outs: Vec<f64> = learners.iter().map(|l| l.tree.predict(&probe)).collect();
                let lo = outs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = outs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let p = m.predict(&probe);
                assert!(p >= lo && p <= hi, "{p} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn same_seed_is_deterministic() {
        let (x, y) = toy();
        let params = AdaBoostParams {
            stages: 12,
            seed: 21,
            ..Default::default()
        };
        let a = fit_adaboost_r2(&x, &y, &params).unwrap();
        let b = fit_adaboost_r2(&x, &y, &params).unwrap();
        assert_eq!(a.predict(&[1.5]), b.predict(&[1.5]));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(fit_adaboost_r2(&[], &[], &AdaBoostParams::default()).is_err());
    }
}
