//! CART-style regression trees and bagged ensembles used by the
//! meta-learner. Trees store their nodes in a flat arena so a fitted model
//! serializes to plain JSON.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats;

/// Hyperparameters for a single tree.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features considered per split; capped at the table width.
    pub feature_subsample: usize,
}

/// `feature < 0` marks a leaf carrying `value`; internal nodes route
/// `x[feature] <= threshold` to `left`, else to `right`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

impl TreeNode {
    fn leaf(value: f64) -> TreeNode {
        TreeNode { feature: -1, threshold: 0.0, left: 0, right: 0, value }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    /// Fits on the rows listed in `rows` (duplicates allowed, which is how
    /// bootstrap resampling enters).
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        rows: &[usize],
        params: &TreeParams,
        rng: &mut RngStream,
    ) -> Result<RegressionTree> {
        if x.len() != y.len() || rows.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows, {} targets, {} sampled",
                x.len(),
                y.len(),
                rows.len()
            )));
        }
        if params.min_leaf == 0 {
            return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
        }
        let p = x[0].len();
        let mut tree = RegressionTree { nodes: Vec::new() };
        tree.grow(x, y, rows.to_vec(), 0, params, p, rng);
        Ok(tree)
    }

    fn grow(
        &mut self,
        x: &[Vec<f64>],
        y: &[f64],
        rows: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        p: usize,
        rng: &mut RngStream,
    ) -> u32 {
        let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        let mean = stats::mean(&ys);
        let here = self.nodes.len() as u32;

        if depth >= params.max_depth
            || rows.len() < 2 * params.min_leaf
            || stats::variance(&ys) <= 0.0
            || p == 0
        {
            self.nodes.push(TreeNode::leaf(mean));
            return here;
        }

        let features = sample_features(p, params.feature_subsample.min(p), rng);
        let Some((feature, threshold)) = best_split(x, y, &rows, &features, params.min_leaf)
        else {
            self.nodes.push(TreeNode::leaf(mean));
            return here;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| x[r][feature] <= threshold);

        self.nodes.push(TreeNode {
            feature: feature as i32,
            threshold,
            left: 0,
            right: 0,
            value: mean,
        });
        let left = self.grow(x, y, left_rows, depth + 1, params, p, rng);
        let right = self.grow(x, y, right_rows, depth + 1, params, p, rng);
        self.nodes[here as usize].left = left;
        self.nodes[here as usize].right = right;
        here
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.feature < 0 {
                return node.value;
            }
            i = if x[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }
}

/// Distinct feature indices via partial Fisher-Yates, returned sorted so
/// split ties resolve by feature index.
fn sample_features(p: usize, count: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..count {
        let j = rng.random_range(i..p);
        idx.swap(i, j);
    }
    let mut out = idx[..count].to_vec();
    out.sort_unstable();
    out
}

/// Best (feature, threshold) by squared-error reduction, or None when no
/// split satisfies the leaf minimum. Thresholds are midpoints between
/// adjacent distinct values.
fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let n = rows.len();
    let total: f64 = rows.iter().map(|&r| y[r]).sum();
    let mut best: Option<(f64, usize, f64)> = None;

    for &f in features {
        let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&r| (x[r][f], y[r])).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left_sum = 0.0;
        for s in 1..n {
            left_sum += pairs[s - 1].1;
            if pairs[s].0 <= pairs[s - 1].0 {
                continue;
            }
            if s < min_leaf || n - s < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            // maximizing sum_l^2/n_l + sum_r^2/n_r minimizes the split SSE
            let score =
                left_sum * left_sum / s as f64 + right_sum * right_sum / (n - s) as f64;
            if best.is_none() || score > best.unwrap().0 {
                let threshold = 0.5 * (pairs[s - 1].0 + pairs[s].0);
                best = Some((score, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Bootstrap-aggregated trees; prediction is the plain mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub trees: Vec<RegressionTree>,
}

impl Ensemble {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        n_trees: usize,
        params: &TreeParams,
        row_subsample: f64,
        rng: &RngStream,
    ) -> Result<Ensemble> {
        if n_trees == 0 {
            return Err(Error::InvalidParameter("ensemble needs >= 1 tree".into()));
        }
        if !(row_subsample > 0.0 && row_subsample <= 1.0) {
            return Err(Error::InvalidParameter(
                "row_subsample must be in (0, 1]".into(),
            ));
        }
        let n = x.len();
        let draws = ((n as f64 * row_subsample).ceil() as usize).max(2).min(n.max(2));
        let mut trees = Vec::with_capacity(n_trees);
        for t in 0..n_trees {
            let mut tree_rng = rng.derive(t as u64);
            let rows: Vec<usize> =
                (0..draws).map(|_| tree_rng.random_range(0..n)).collect();
            trees.push(RegressionTree::fit(x, y, &rows, params, &mut tree_rng)?);
        }
        Ok(Ensemble { trees })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}
