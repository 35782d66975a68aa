//! Tree-based meta-classifiers over five-band score vectors.
//!
//! All learners share one greedy split search ([`cart`]): candidate
//! thresholds are midpoints between consecutive distinct feature values, the
//! split rule is `value < threshold` goes left, and ties in the criterion are
//! broken towards the lowest feature index and then the smallest threshold.

pub mod adaboost;
pub mod cart;
pub mod forest;
pub mod gboost;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flooding::{ScoreVector, ScoreVectorError, NUM_BANDS};

pub use adaboost::{fit_adaboost, AdaBoostModel, Stump, DEFAULT_ADABOOST_STAGES};
pub use cart::{fit_tree, TreeParams, DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use gboost::{fit_gboost, GBoostModel, GBoostParams};

/// Criterion values closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub type Features = [f64; NUM_BANDS];

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("training data is empty")]
    Empty,
    #[error("training data must contain both adversarial and benign examples")]
    SingleClass,
    #[error("row {0} has no ground-truth label")]
    MissingTruth(usize),
    #[error("row {row}: feature {feature} is not finite")]
    NonFinite { row: usize, feature: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Score(#[from] ScoreVectorError),
}

/// Feature matrix and labels (`true` = adversarial).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    pub x: Vec<Features>,
    pub y: Vec<bool>,
}

impl TrainSet {
    pub fn new(x: Vec<Features>, y: Vec<bool>) -> Result<Self, TreeError> {
        assert_eq!(x.len(), y.len(), "feature and label counts differ");
        if x.is_empty() {
            return Err(TreeError::Empty);
        }
        for (row, f) in x.iter().enumerate() {
            if let Some(feature) = f.iter().position(|v| !v.is_finite()) {
                return Err(TreeError::NonFinite { row, feature });
            }
        }
        if !(y.contains(&true) && y.contains(&false)) {
            return Err(TreeError::SingleClass);
        }
        Ok(Self { x, y })
    }

    /// Complete score vectors with ground truth.
    pub fn from_vectors(vectors: &[ScoreVector]) -> Result<Self, TreeError> {
        let mut x = Vec::with_capacity(vectors.len());
        let mut y = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            x.push(v.features()?);
            y.push(v.is_adversarial.ok_or(TreeError::MissingTruth(i))?);
        }
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    /// Adversarial probability for classification trees, additive stage
    /// output for regression trees.
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    pub fn evaluate(&self, x: &Features) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Checks feature indices and that every number is finite.
    pub fn validate(&self) -> Result<(), TreeError> {
        match self {
            TreeNode::Leaf { value } if value.is_finite() => Ok(()),
            TreeNode::Leaf { value } => Err(TreeError::InvalidParam(format!("leaf value {value}"))),
            TreeNode::Split { feature, threshold, left, right } => {
                if *feature >= NUM_BANDS || !threshold.is_finite() {
                    return Err(TreeError::InvalidParam(format!("split on feature {feature} at {threshold}")));
                }
                left.validate()?;
                right.validate()
            }
        }
    }
}

/// `true` iff the adversarial probability reaches one half.
pub fn decide(probability: f64) -> bool {
    probability >= 0.5
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
