//! Gradient-boosted regression trees on the logistic loss.
//!
//! The model starts from the prior log-odds and each stage fits a
//! depth-limited regression tree to the residuals `y − p`. Leaf values use
//! the curvature bound of the logistic loss (its second derivative never
//! exceeds ¼), giving the step `4·mean(residual)`; with that step the
//! quadratic upper bound guarantees the training loss cannot increase for
//! any learning rate up to 2.

use serde::{Deserialize, Serialize};

use super::cart::{grow, mean_of};
use super::{sigmoid, softplus, Features, TrainSet, TreeError, TreeNode};
use crate::flooding::NUM_BANDS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GBoostParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for GBoostParams {
    fn default() -> Self {
        Self { n_stages: 100, learning_rate: 0.1, max_depth: 3, min_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBoostModel {
    /// Log-odds of the adversarial class in the training set.
    pub prior: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
    /// Mean training log-loss before any stage and after each one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<f64>,
}

impl GBoostModel {
    pub fn margin(&self, x: &Features) -> f64 {
        self.prior + self.learning_rate * self.trees.iter().map(|t| t.evaluate(x)).sum::<f64>()
    }

    pub fn probability(&self, x: &Features) -> f64 {
        sigmoid(self.margin(x))
    }
}

/// Mean logistic loss of margins `f` against labels `y`.
pub fn log_loss(f: &[f64], y: &[bool]) -> f64 {
    let total: f64 = f.iter().zip(y).map(|(&m, &a)| if a { softplus(-m) } else { softplus(m) }).sum();
    total / f.len() as f64
}

pub fn fit_gboost(train: &TrainSet, params: &GBoostParams) -> Result<GBoostModel, TreeError> {
    if !params.learning_rate.is_finite() || params.learning_rate < 0.0 {
        return Err(TreeError::InvalidParam(format!("learning rate {}", params.learning_rate)));
    }
    if params.min_leaf == 0 {
        return Err(TreeError::InvalidParam("min_leaf must be at least 1".into()));
    }
    let n = train.len();
    let pos = train.y.iter().filter(|&&a| a).count() as f64;
    let prior = (pos / (n as f64 - pos)).ln();
    let mut f = vec![prior; n];
    let mut trace = vec![log_loss(&f, &train.y)];
    let mut trees = Vec::with_capacity(params.n_stages);
    let all: Vec<usize> = (0..NUM_BANDS).collect();

    for _ in 0..params.n_stages {
        let residual: Vec<f64> = f.iter().zip(&train.y).map(|(&m, &a)| f64::from(u8::from(a)) - sigmoid(m)).collect();
        let mean = mean_of(&residual);
        let leaf = |idx: &[usize]| 4.0 * mean(idx);
        let tree = grow(&train.x, &residual, (0..n).collect(), params.max_depth, params.min_leaf, &leaf, &mut || all.clone());
        for (fi, x) in f.iter_mut().zip(&train.x) {
            *fi += params.learning_rate * tree.evaluate(x);
        }
        trace.push(log_loss(&f, &train.y));
        trees.push(tree);
    }
    Ok(GBoostModel { prior, learning_rate: params.learning_rate, trees, loss_trace: trace })
}
