//! Detection of adversarial audio examples by noise flooding.
//!
//! A classifier's prediction on an adversarial example tends to flip under
//! much less random noise than its prediction on natural speech. This crate
//! measures that: [`flooding::flooding_score`] finds the smallest uniform
//! noise bound, optionally confined to a frequency band, that changes the
//! predicted label. Scores on five bands form a feature vector that
//! [`detection`] (thresholds and voting) and [`trees`] (CART, random forest,
//! AdaBoost, gradient boosting) turn into detectors, and [`evaluation`]
//! reports precision, recall and F1 for them.

pub mod audio;
pub mod classifier;
pub mod dataset;
pub mod detection;
pub mod evaluation;
pub mod flooding;
pub mod model;
pub mod seed;
pub mod spectrum;
pub mod synth;
pub mod trees;
