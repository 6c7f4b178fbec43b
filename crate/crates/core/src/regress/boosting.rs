//! Stochastic gradient boosting over regression trees, squared-error loss.
//!
//! The model starts from the target mean; each stage fits a tree to the
//! current residuals on a fresh subsample and is added with shrinkage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::tree::{SplitContext, TreeParams};
use super::EnsembleModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingParams {
    /// Number of boosting stages (M).
    pub stages: usize,
    /// Shrinkage applied to every stage.
    pub shrinkage: f64,
    /// Fraction of rows drawn (without replacement) per stage.
    pub subsample: f64,
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for GradientBoostingParams {
    fn default() -> Self {
        GradientBoostingParams {
            stages: 100,
            shrinkage: 0.1,
            subsample: 1.0,
            tree: TreeParams::default(),
            seed: 0,
        }
    }
}

pub fn fit_gradient_boosting(
    x: &[Vec<f64>],
    y: &[f64],
    params: &GradientBoostingParams,
) -> Result<EnsembleModel> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) {
        return Err(Error::invalid("shrinkage must be in (0, 1]"));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::invalid("subsample must be in (0, 1]"));
    }
    let ctx = SplitContext::new(x)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("targets must be finite"));
    }
    let n = x.len();
    let base = y.iter().sum::<f64>() / n as f64;

    let mut rng = Rng::from_seed(params.seed);
    let mut preds = vec![base; n];
    let mut residuals = vec![0.0; n];
    let mut counts = vec![1u32; n];
    let n_sub = if params.subsample < 1.0 {
        ((n as f64 * params.subsample).round() as usize).clamp(1, n)
    } else {
        n
    };

    let mut trees = Vec::with_capacity(params.stages);
    for _ in 0..params.stages {
        for i in 0..n {
            residuals[i] = y[i] - preds[i];
        }
        if n_sub < n {
            counts.iter_mut().for_each(|c| *c = 0);
            for i in rng.sample_indices(n, n_sub) {
                counts[i] = 1;
            }
        }
        let tree = ctx.fit(&residuals, &counts, &params.tree)?;
        for (i, row) in x.iter().enumerate() {
            preds[i] += params.shrinkage * tree.predict(row);
        }
        trees.push(tree);
    }
    Ok(EnsembleModel::GradientBoosting {
        base,
        shrinkage: params.shrinkage,
        trees,
    })
}
