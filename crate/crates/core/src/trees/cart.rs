//! Greedy CART growth shared by every learner.
//!
//! Splits minimise the summed squared error of a per-row target. With a 0/1
//! target that is exactly half the size-weighted Gini impurity, so the same
//! search serves classification trees (Gini) and the regression trees inside
//! gradient boosting.

use serde::{Deserialize, Serialize};

use super::{Features, TrainSet, TreeError, TreeNode, TIE_TOLERANCE};
use crate::flooding::NUM_BANDS;

pub const DEFAULT_MAX_DEPTH: usize = 4;
pub const DEFAULT_MIN_LEAF: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: DEFAULT_MAX_DEPTH, min_leaf: DEFAULT_MIN_LEAF }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.min_leaf == 0 {
            return Err(TreeError::InvalidParam("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction in squared error per row of the node.
    pub gain: f64,
}

fn sse(sum: f64, sum_sq: f64, n: f64) -> f64 {
    sum_sq - sum * sum / n
}

/// Best split of the rows `idx` over `features` (ascending), or `None` when
/// no threshold leaves at least `min_leaf` rows on each side.
pub(crate) fn best_split(x: &[Features], t: &[f64], idx: &[usize], features: &[usize], min_leaf: usize) -> Option<Split> {
    let n = idx.len();
    let (total, total_sq) = idx.iter().fold((0.0, 0.0), |(s, q), &i| (s + t[i], q + t[i] * t[i]));
    let parent = sse(total, total_sq, n as f64);

    let mut candidates = Vec::new();
    let mut order = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let (mut s, mut q) = (0.0, 0.0);
        for k in 0..n - 1 {
            let i = order[k];
            s += t[i];
            q += t[i] * t[i];
            let (lo, hi) = (x[i][f], x[order[k + 1]][f]);
            let n_left = k + 1;
            if lo < hi && n_left >= min_leaf && n - n_left >= min_leaf {
                let children = sse(s, q, n_left as f64) + sse(total - s, total_sq - q, (n - n_left) as f64);
                candidates.push(Split { feature: f, threshold: (lo + hi) / 2.0, gain: (parent - children) / n as f64 });
            }
        }
    }
    let best = candidates.iter().map(|c| c.gain).reduce(f64::max)?;
    // candidates are already ordered by (feature, threshold)
    candidates.into_iter().find(|c| c.gain >= best - TIE_TOLERANCE)
}

/// Grows a tree on target `t` over rows `idx`. `features` is asked for the
/// eligible features at every split attempt, in pre-order.
pub(crate) fn grow(
    x: &[Features],
    t: &[f64],
    idx: Vec<usize>,
    depth_left: usize,
    min_leaf: usize,
    leaf: &dyn Fn(&[usize]) -> f64,
    features: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    let pure = idx.iter().all(|&i| t[i] == t[idx[0]]);
    if depth_left == 0 || pure || idx.len() < 2 * min_leaf {
        return TreeNode::Leaf { value: leaf(&idx) };
    }
    let eligible = features();
    let Some(split) = best_split(x, t, &idx, &eligible, min_leaf) else {
        return TreeNode::Leaf { value: leaf(&idx) };
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[i][split.feature] < split.threshold);
    let left = grow(x, t, l, depth_left - 1, min_leaf, leaf, features);
    let right = grow(x, t, r, depth_left - 1, min_leaf, leaf, features);
    TreeNode::Split { feature: split.feature, threshold: split.threshold, left: Box::new(left), right: Box::new(right) }
}

pub(crate) fn indicator(y: &[bool]) -> Vec<f64> {
    y.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect()
}

pub(crate) fn mean_of(t: &[f64]) -> impl Fn(&[usize]) -> f64 + '_ {
    move |idx: &[usize]| idx.iter().map(|&i| t[i]).sum::<f64>() / idx.len() as f64
}

/// Classification tree on Gini impurity; leaves hold the adversarial
/// fraction of their training rows.
pub fn fit_tree(train: &TrainSet, params: &TreeParams) -> Result<TreeNode, TreeError> {
    params.validate()?;
    let t = indicator(&train.y);
    let all: Vec<usize> = (0..NUM_BANDS).collect();
    let leaf = mean_of(&t);
    let tree = grow(&train.x, &t, (0..train.len()).collect(), params.max_depth, params.min_leaf, &leaf, &mut || all.clone());
    Ok(tree)
}
