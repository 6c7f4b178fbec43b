//! Regression learners for label calibration and recall estimation.
//!
//! Everything is implemented over dense rows: single CART trees, stochastic
//! gradient boosting, extremely randomized trees, AdaBoost.R2 and ordinary
//! least squares, plus a multi-output wrapper. Fitted models are immutable
//! and their predictions are pure functions.

mod adaboost;
mod boosting;
mod extra;
mod linear;
mod multi;
mod tree;

pub use adaboost::{fit_adaboost_r2, AdaBoostParams, AdaLearner, AdaLoss};
pub use boosting::{fit_gradient_boosting, GradientBoostingParams};
pub use extra::{fit_extra_trees, ExtraTreesParams};
pub use linear::fit_linear;
pub use multi::{fit_multi_output, MultiOutputModel};
pub use tree::{fit_tree, Node, RegressionTree, TreeParams};

use serde::{Deserialize, Serialize};

use crate::error::Result;

use self::adaboost::weighted_median;

/// A fitted regressor of any supported family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum EnsembleModel {
    Tree(RegressionTree),
    GradientBoosting {
        base: f64,
        shrinkage: f64,
        trees: Vec<RegressionTree>,
    },
    ExtraTrees {
        trees: Vec<RegressionTree>,
    },
    AdaBoostR2 {
        learners: Vec<AdaLearner>,
    },
    Linear {
        coefficients: Vec<f64>,
        intercept: f64,
    },
}

impl EnsembleModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            EnsembleModel::Tree(tree) => tree.predict(row),
            EnsembleModel::GradientBoosting {
                base,
                shrinkage,
                trees,
            } => {
                let mut acc = *base;
                for tree in trees {
                    acc += shrinkage * tree.predict(row);
                }
                acc
            }
            EnsembleModel::ExtraTrees { trees } => {
                let sum: f64 = trees.iter().map(|t| t.predict(row)).sum();
                sum / trees.len() as f64
            }
            EnsembleModel::AdaBoostR2 { learners } => {
                let mut outs: Vec<(f64, f64)> = learners
                    .iter()
                    .map(|l| (l.tree.predict(row), l.weight))
                    .collect();
                weighted_median(&mut outs)
            }
            EnsembleModel::Linear {
                coefficients,
                intercept,
            } => {
                let mut acc = *intercept;
                for (c, v) in coefficients.iter().zip(row) {
                    acc += c * v;
                }
                acc
            }
        }
    }
}

fn default_gb_stages() -> usize {
    100
}
fn default_shrinkage() -> f64 {
    0.1
}
fn default_subsample() -> f64 {
    1.0
}
fn default_max_depth() -> usize {
    3
}
fn default_min_leaf() -> usize {
    1
}
fn default_n_trees() -> usize {
    100
}
fn default_ada_stages() -> usize {
    50
}
fn default_ada_loss() -> AdaLoss {
    AdaLoss::Linear
}

/// Configuration of a regressor family; `fit` dispatches to the matching
/// trainer with the given seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegressorSpec {
    Linear,
    Tree {
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_samples_leaf: usize,
    },
    GradientBoosting {
        #[serde(default = "default_gb_stages")]
        stages: usize,
        #[serde(default = "default_shrinkage")]
        shrinkage: f64,
        #[serde(default = "default_subsample")]
        subsample: f64,
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_samples_leaf: usize,
    },
    ExtraTrees {
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        /// Candidate features per node; omitted means ceil(sqrt(d)).
        #[serde(default)]
        k_features: Option<usize>,
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_min_leaf")]
        min_samples_leaf: usize,
    },
    AdaBoostR2 {
        #[serde(default = "default_ada_stages")]
        stages: usize,
        #[serde(default = "default_ada_loss")]
        loss: AdaLoss,
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_samples_leaf: usize,
    },
}

impl RegressorSpec {
    pub fn default_gradient_boosting() -> Self {
        RegressorSpec::GradientBoosting {
            stages: default_gb_stages(),
            shrinkage: default_shrinkage(),
            subsample: default_subsample(),
            max_depth: default_max_depth(),
            min_samples_leaf: default_min_leaf(),
        }
    }

    pub fn default_extra_trees() -> Self {
        RegressorSpec::ExtraTrees {
            n_trees: default_n_trees(),
            k_features: None,
            max_depth: None,
            min_samples_leaf: default_min_leaf(),
        }
    }

    pub fn default_adaboost() -> Self {
        RegressorSpec::AdaBoostR2 {
            stages: default_ada_stages(),
            loss: default_ada_loss(),
            max_depth: default_max_depth(),
            min_samples_leaf: default_min_leaf(),
        }
    }

    pub fn fit(&self, x: &[Vec<f64>], y: &[f64], seed: u64) -> Result<EnsembleModel> {
        match self {
            RegressorSpec::Linear => fit_linear(x, y),
            RegressorSpec::Tree {
                max_depth,
                min_samples_leaf,
            } => {
                let params = TreeParams {
                    max_depth: *max_depth,
                    min_samples_leaf: *min_samples_leaf,
                };
                Ok(EnsembleModel::Tree(fit_tree(x, y, &params)?))
            }
            RegressorSpec::GradientBoosting {
                stages,
                shrinkage,
                subsample,
                max_depth,
                min_samples_leaf,
            } => fit_gradient_boosting(
                x,
                y,
                &GradientBoostingParams {
                    stages: *stages,
                    shrinkage: *shrinkage,
                    subsample: *subsample,
                    tree: TreeParams {
                        max_depth: *max_depth,
                        min_samples_leaf: *min_samples_leaf,
                    },
                    seed,
                },
            ),
            RegressorSpec::ExtraTrees {
                n_trees,
                k_features,
                max_depth,
                min_samples_leaf,
            } => fit_extra_trees(
                x,
                y,
                &ExtraTreesParams {
                    n_trees: *n_trees,
                    k_features: *k_features,
                    max_depth: *max_depth,
                    min_samples_leaf: *min_samples_leaf,
                    seed,
                },
            ),
            RegressorSpec::AdaBoostR2 {
                stages,
                loss,
                max_depth,
                min_samples_leaf,
            } => fit_adaboost_r2(
                x,
                y,
                &AdaBoostParams {
                    stages: *stages,
                    loss: *loss,
                    tree: TreeParams {
                        max_depth: *max_depth,
                        min_samples_leaf: *min_samples_leaf,
                    },
                    seed,
                },
            ),
        }
    }
}
