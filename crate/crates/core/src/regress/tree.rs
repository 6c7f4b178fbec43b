//! CART regression trees with squared-error split search.
//!
//! Split search is exact: for every feature, candidate thresholds are the
//! midpoints between adjacent distinct sorted values, and the best split
//! maximizes the squared-error reduction. Ties go to the lowest feature
//! index, then the lowest threshold. Leaves predict the mean of the targets
//! that reach them.
//!
//! [`SplitContext`] presorts every column once so ensembles can fit many
//! trees over the same design matrix; nodes are contiguous ranges of the
//! per-feature order arrays, partitioned stably on every split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// A fitted regression tree. `nodes[0]` is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) n_features: usize,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Column-major view of a design matrix with per-column presorted row order.
/// Built once, reused by every tree an ensemble fits over the same rows.
pub(crate) struct SplitContext {
    cols: Vec<Vec<f64>>,
    n_rows: usize,
    /// Per feature: row ids sorted ascending by value (stable).
    order: Vec<Vec<u32>>,
}

impl SplitContext {
    pub(crate) fn new(x: &[Vec<f64>]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("regression over an empty sample"));
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
        let n_rows = x.len();
        let mut cols = vec![Vec::with_capacity(n_rows); d];
        for row in x {
            for (f, v) in row.iter().enumerate() {
                cols[f].push(*v);
            }
        }
        let order = cols
            .iter()
            .map(|col| {
                let mut ids: Vec<u32> = (0..n_rows as u32).collect();
                ids.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                ids
            })
            .collect();
        Ok(SplitContext {
            cols,
            n_rows,
            order,
        })
    }

    pub(crate) fn n_features(&self) -> usize {
        self.cols.len()
    }

    /// Fit one tree on the (multi)set of rows given by `counts` (copies per
    /// row id; zero means absent) against targets `y` indexed by row id.
    pub(crate) fn fit(
        &self,
        y: &[f64],
        counts: &[u32],
        params: &TreeParams,
    ) -> Result<RegressionTree> {
        if y.len() != self.n_rows || counts.len() != self.n_rows {
            return Err(Error::invalid(
                "target/count length does not match the design matrix",
            ));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("targets must be finite"));
        }
        let n_active: usize = counts.iter().map(|&c| c as usize).sum();
        if n_active == 0 {
            return Err(Error::invalid("regression over an empty sample"));
        }
        // Per-feature order arrays restricted to the active multiset.
        let d = self.n_features();
        let full_sample = n_active == self.n_rows && counts.iter().all(|&c| c == 1);
        let mut ord: Vec<Vec<u32>> = Vec::with_capacity(d);
        for f in 0..d {
            if full_sample {
                ord.push(self.order[f].clone());
                continue;
            }
            let mut ids = Vec::with_capacity(n_active);
            for &id in &self.order[f] {
                for _ in 0..counts[id as usize] {
                    ids.push(id);
                }
            }
            ord.push(ids);
        }
        let mut builder = TreeBuilder {
            ctx: self,
            y,
            params,
            ord,
            scratch: vec![0u32; n_active],
            nodes: Vec::new(),
        };
        builder.grow(0, n_active, 0);
        Ok(RegressionTree {
            nodes: builder.nodes,
            n_features: d,
        })
    }
}

struct TreeBuilder<'a> {
    ctx: &'a SplitContext,
    y: &'a [f64],
    params: &'a TreeParams,
    ord: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
}

impl TreeBuilder<'_> {
    /// Grow the node over positions [lo, hi); returns its index.
    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> u32 {
        let n = hi - lo;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for &id in &self.ord[0][lo..hi] {
            let t = self.y[id as usize];
            sum += t;
            sumsq += t * t;
        }
        let mean = sum / n as f64;
        let sse = sumsq - sum * sum / n as f64;

        let at = self.nodes.len() as u32;
        if depth >= self.params.max_depth || n < 2 * self.params.min_samples_leaf || sse <= 0.0 {
            self.nodes.push(Node::Leaf { value: mean });
            return at;
        }
        let best = self.find_best_split(lo, hi, sum, sumsq, sse);
        let Some(best) = best else {
            self.nodes.push(Node::Leaf { value: mean });
            return at;
        };

        self.nodes.push(Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: 0,
            right: 0,
        });
        let mid = self.partition(lo, hi, best.feature, best.threshold);
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[at as usize]
        {
            *l = left;
            *r = right;
        }
        at
    }

    fn find_best_split(
        &self,
        lo: usize,
        hi: usize,
        total_sum: f64,
        total_sumsq: f64,
        parent_sse: f64,
    ) -> Option<BestSplit> {
        let n = hi - lo;
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<BestSplit> = None;
        let mut best_gain = 0.0;
        for f in 0..self.ctx.n_features() {
            let col = &self.ctx.cols[f];
            let ids = &self.ord[f][lo..hi];
            // Constant within the node (sorted order): nothing to split.
            if col[ids[0] as usize] == col[ids[n - 1] as usize] {
                continue;
            }
            let mut left_sum = 0.0;
            let mut left_sumsq = 0.0;
            let mut v_prev = col[ids[0] as usize];
            for i in 1..n {
                let prev = ids[i - 1] as usize;
                let t = self.y[prev];
                left_sum += t;
                left_sumsq += t * t;
                let v_cur = col[ids[i] as usize];
                if v_prev == v_cur {
                    continue;
                }
                let boundary = v_prev;
                v_prev = v_cur;
                let (n_l, n_r) = (i, n - i);
                if n_l < min_leaf || n_r < min_leaf {
                    continue;
                }
                let right_sum = total_sum - left_sum;
                let right_sumsq = total_sumsq - left_sumsq;
                let sse_l = left_sumsq - left_sum * left_sum / n_l as f64;
                let sse_r = right_sumsq - right_sum * right_sum / n_r as f64;
                let gain = parent_sse - (sse_l + sse_r);
                if gain > best_gain {
                    let mut threshold = (boundary + v_cur) / 2.0;
                    // Rounding may collapse the midpoint onto the upper
                    // value; fall back to the lower value, which induces the
                    // same partition.
                    if threshold >= v_cur {
                        threshold = boundary;
                    }
                    best_gain = gain;
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }

    /// Stable-partition every feature's range by the chosen predicate;
    /// returns the first right-side position.
    fn partition(&mut self, lo: usize, hi: usize, feature: usize, threshold: f64) -> usize {
        let col = &self.ctx.cols[feature];
        let mut mid = lo;
        for f in 0..self.ord.len() {
            let mut left_at = 0;
            let mut right_at = 0;
            for i in lo..hi {
                let id = self.ord[f][i];
                if col[id as usize] <= threshold {
                    self.ord[f][lo + left_at] = id;
                    left_at += 1;
                } else {
                    self.scratch[right_at] = id;
                    right_at += 1;
                }
            }
            self.ord[f][lo + left_at..hi].copy_from_slice(&self.scratch[..right_at]);
            mid = lo + left_at;
        }
        mid
    }
}

/// Fit a single regression tree on dense rows.
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Result<RegressionTree> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    let ctx = SplitContext::new(x)?;
    ctx.fit(y, &vec![1u32; x.len()], params)
}
