//! Random forest: bootstrap resamples and per-split feature subsampling.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{grow, indicator, mean_of};
use super::{decide, Features, TrainSet, TreeError, TreeNode};
use crate::flooding::NUM_BANDS;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features considered at each split.
    pub max_features: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, max_features: 2, max_depth: 8, min_leaf: 1, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    /// Seed each tree was grown from.
    pub seeds: Vec<u64>,
    pub max_features: usize,
}

impl ForestModel {
    /// Fraction of trees voting adversarial.
    pub fn probability(&self, x: &Features) -> f64 {
        let votes = self.trees.iter().filter(|t| decide(t.evaluate(x))).count();
        votes as f64 / self.trees.len() as f64
    }
}

pub fn tree_seed(base: u64, index: usize) -> u64 {
    seed::derive(base, seed::STREAM_TREE, index as u64)
}

pub fn fit_forest(train: &TrainSet, params: &ForestParams) -> Result<ForestModel, TreeError> {
    if params.n_trees == 0 {
        return Err(TreeError::InvalidParam("n_trees must be at least 1".into()));
    }
    if !(1..=NUM_BANDS).contains(&params.max_features) {
        return Err(TreeError::InvalidParam(format!("max_features must be in 1..={NUM_BANDS}")));
    }
    if params.min_leaf == 0 {
        return Err(TreeError::InvalidParam("min_leaf must be at least 1".into()));
    }
    let t = indicator(&train.y);
    let n = train.len();
    let seeds: Vec<u64> = (0..params.n_trees).map(|i| tree_seed(params.seed, i)).collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = seed::rng(s);
            let idx: Vec<usize> = if params.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            let mut features = || {
                let mut f = sample(&mut rng, NUM_BANDS, params.max_features).into_vec();
                f.sort_unstable();
                f
            };
            grow(&train.x, &t, idx, params.max_depth, params.min_leaf, &mean_of(&t), &mut features)
        })
        .collect();
    Ok(ForestModel { trees, seeds, max_features: params.max_features })
}
