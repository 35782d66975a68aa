//! Discrete AdaBoost with decision stumps.
//!
//! Labels are ±1 (adversarial = +1). Each stage picks the stump of least
//! weighted error, searching features in order, thresholds ascending, and
//! the "left is adversarial" polarity before the reversed one; errors within
//! the tie tolerance keep the first stump found. The stage weight is
//! `½·ln((1−err)/err)`. Boosting stops before adding a stage whose error is
//! at least one half, and after adding a stage with zero error (whose
//! weight uses `err = 1e-10` so it stays finite).

use serde::{Deserialize, Serialize};

use super::{sigmoid, Features, TrainSet, TreeError, TIE_TOLERANCE};
use crate::flooding::NUM_BANDS;

pub const DEFAULT_ADABOOST_STAGES: usize = 50;

/// Error substituted for a perfect stump when computing its weight.
pub const MIN_STAGE_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    /// Whether `value < threshold` votes adversarial (otherwise the reverse).
    pub left_adversarial: bool,
    pub alpha: f64,
    /// Weighted training error when the stump was chosen.
    pub error: f64,
}

impl Stump {
    /// +1 for an adversarial vote, −1 for benign.
    pub fn vote(&self, x: &Features) -> f64 {
        if (x[self.feature] < self.threshold) == self.left_adversarial {
            1.0
        } else {
            -1.0
        }
    }

    /// Weight normaliser of this stage: `(1−err)·e^(−α) + err·e^(α)`.
    pub fn normalizer(&self) -> f64 {
        (1.0 - self.error) * (-self.alpha).exp() + self.error * self.alpha.exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stages: Vec<Stump>,
}

impl AdaBoostModel {
    pub fn margin(&self, x: &Features) -> f64 {
        self.stages.iter().map(|s| s.alpha * s.vote(x)).sum()
    }

    /// `σ(2·margin)`, the logistic reading of the exponential-loss margin;
    /// it reaches one half exactly when the margin is non-negative.
    pub fn probability(&self, x: &Features) -> f64 {
        sigmoid(2.0 * self.margin(x))
    }

    /// Upper bound `∏ Z_t` on the training error.
    pub fn training_error_bound(&self) -> f64 {
        self.stages.iter().map(Stump::normalizer).product()
    }
}

fn best_stump(x: &[Features], y: &[bool], w: &[f64]) -> Option<(usize, f64, bool, f64)> {
    let n = x.len();
    let total_adv: f64 = (0..n).filter(|&i| y[i]).map(|i| w[i]).sum();
    let total: f64 = w.iter().sum();
    let mut candidates = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for f in 0..NUM_BANDS {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let (mut left_adv, mut left_ben) = (0.0, 0.0);
        for k in 0..n - 1 {
            let i = order[k];
            if y[i] {
                left_adv += w[i];
            } else {
                left_ben += w[i];
            }
            let (lo, hi) = (x[i][f], x[order[k + 1]][f]);
            if lo < hi {
                let thr = (lo + hi) / 2.0;
                let err_left_adv = left_ben + (total_adv - left_adv);
                let err_reversed = left_adv + (total - total_adv - left_ben);
                candidates.push((f, thr, true, err_left_adv));
                candidates.push((f, thr, false, err_reversed));
            }
        }
    }
    let best = candidates.iter().map(|c| c.3).reduce(f64::min)?;
    candidates.into_iter().find(|c| c.3 <= best + TIE_TOLERANCE)
}

pub fn fit_adaboost(train: &TrainSet, n_stages: usize) -> Result<AdaBoostModel, TreeError> {
    let n = train.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    while stages.len() < n_stages {
        let Some((feature, threshold, left_adversarial, error)) = best_stump(&train.x, &train.y, &w) else {
            break;
        };
        let error = error.max(0.0);
        if error >= 0.5 {
            break;
        }
        let alpha = 0.5 * ((1.0 - error.max(MIN_STAGE_ERROR)) / error.max(MIN_STAGE_ERROR)).ln();
        let stump = Stump { feature, threshold, left_adversarial, alpha, error };
        stages.push(stump);
        if error == 0.0 {
            break;
        }
        for (i, wi) in w.iter_mut().enumerate() {
            let y = if train.y[i] { 1.0 } else { -1.0 };
            *wi *= (-alpha * y * stump.vote(&train.x[i])).exp();
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= z);
    }
    Ok(AdaBoostModel { stages })
}
