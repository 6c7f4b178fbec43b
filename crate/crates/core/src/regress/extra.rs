//! Extremely randomized trees: every tree sees the full sample, each node
//! draws thresholds uniformly at random within the observed range of a
//! random feature subset and keeps the best of those candidates. The
//! ensemble predicts the mean over trees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

use super::tree::{Node, RegressionTree};
use super::EnsembleModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraTreesParams {
    pub n_trees: usize,
    /// Candidate features per node; `None` means ceil(sqrt(d)).
    pub k_features: Option<usize>,
    /// `None` means unbounded depth.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ExtraTreesParams {
    fn default() -> Self {
        ExtraTreesParams {
            n_trees: 100,
            k_features: None,
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

pub fn fit_extra_trees(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ExtraTreesParams,
) -> Result<EnsembleModel> {
    if x.is_empty() {
        return Err(Error::invalid("regression over an empty sample"));
    }
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if params.n_trees == 0 {
        return Err(Error::invalid("n_trees must be at least 1"));
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::invalid(format!(
                "row {i} has {} features, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "row {i} contains a non-finite value"
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("targets must be finite"));
    }
    let k = params
        .k_features
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .max(1);
    let max_depth = params.max_depth.unwrap_or(usize::MAX);

    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut tree_rng = Rng::from_seed(rng::derive(params.seed, t as u64));
        let mut builder = ExtraBuilder {
            x,
            y,
            k,
            max_depth,
            min_leaf: params.min_samples_leaf.max(1),
            rng: &mut tree_rng,
            nodes: Vec::new(),
        };
        let all: Vec<u32> = (0..x.len() as u32).collect();
        builder.grow(all, 0);
        trees.push(RegressionTree {
            nodes: builder.nodes,
            n_features: d,
        });
    }
    Ok(EnsembleModel::ExtraTrees { trees })
}

struct ExtraBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    k: usize,
    max_depth: usize,
    min_leaf: usize,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
}

impl ExtraBuilder<'_> {
    fn grow(&mut self, samples: Vec<u32>, depth: usize) -> u32 {
        let n = samples.len();
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for &id in &samples {
            let t = self.y[id as usize];
            sum += t;
            sumsq += t * t;
        }
        let mean = sum / n as f64;
        let sse = sumsq - sum * sum / n as f64;

        let at = self.nodes.len() as u32;
        if depth >= self.max_depth || n < 2 * self.min_leaf || sse <= 0.0 {
            self.nodes.push(Node::Leaf { value: mean });
            return at;
        }

        // Features with a non-degenerate range at this node.
        let d = self.x[0].len();
        let mut candidates: Vec<usize> = Vec::new();
        for f in 0..d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &id in &samples {
                let v = self.x[id as usize][f];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi > lo {
                candidates.push(f);
            }
        }
        if candidates.is_empty() {
            self.nodes.push(Node::Leaf { value: mean });
            return at;
        }
        let k = self.k.min(candidates.len());
        let chosen = self.rng.sample_indices(candidates.len(), k);

        let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, gain)
        for pick in chosen {
            let f = candidates[pick];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &id in &samples {
                let v = self.x[id as usize][f];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let threshold = self.rng.range_f64(lo, hi);
            let mut n_l = 0usize;
            let mut sum_l = 0.0;
            let mut sumsq_l = 0.0;
            for &id in &samples {
                if self.x[id as usize][f] <= threshold {
                    let t = self.y[id as usize];
                    n_l += 1;
                    sum_l += t;
                    sumsq_l += t * t;
                }
            }
            let n_r = n - n_l;
            if n_l < self.min_leaf || n_r < self.min_leaf {
                continue;
            }
            let sum_r = sum - sum_l;
            let sumsq_r = sumsq - sumsq_l;
            let sse_l = sumsq_l - sum_l * sum_l / n_l as f64;
            let sse_r = sumsq_r - sum_r * sum_r / n_r as f64;
            let gain = sse - (sse_l + sse_r);
            if best.as_ref().is_none_or(|b| gain > b.2) {
                best = Some((f, threshold, gain));
            }
        }
        let Some((feature, threshold, _)) = best else {
            self.nodes.push(Node::Leaf { value: mean });
            return at;
        };

        self.nodes.push(Node::Split {
            feature: feature as u32,
            threshold,
            left: 0,
            right: 0,
        });
        let (left_ids, right_ids): (Vec<u32>, Vec<u32>) = samples
            .into_iter()
            .partition(|&id| self.x[id as usize][feature] <= threshold);
        let left = self.grow(left_ids, depth + 1);
        let right = self.grow(right_ids, depth + 1);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[at as usize]
        {
            *l = left;
            *r = right;
        }
        at
    }
}
