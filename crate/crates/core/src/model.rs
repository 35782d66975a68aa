//! Common prediction interface and the persisted model file.
//!
//! A model file is pretty-printed JSON:
//!
//! ```text
//! { "format": "noiseflood-model", "version": 1,
//!   "detector": { "kind": "threshold" | "majority" | "ltv" | "tree" | "forest" | "adaboost" | "gboost", ... },
//!   "provenance": { "seed": ..., "step": ..., "eps_max": ..., "dataset_sha256": ..., ... } }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::detection::{detect, ThresholdModel, VotingModel, MAJORITY_VOTES};
use crate::flooding::{canonical_index, ScoreVector, ScoreVectorError, NUM_BANDS};
use crate::trees::{decide, AdaBoostModel, Features, ForestModel, GBoostModel, TreeNode};

pub const MODEL_FORMAT: &str = "noiseflood-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub adversarial: bool,
    /// Adversarial probability or vote share in `[0, 1]`.
    pub probability: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("model is not fitted: {0}")]
    Unfitted(String),
    #[error(transparent)]
    Score(#[from] ScoreVectorError),
}

/// Anything that classifies score vectors.
pub trait Detector: Send + Sync {
    fn name(&self) -> String;
    /// Canonical band indices whose scores `predict` reads.
    fn required_bands(&self) -> Vec<usize>;
    fn predict(&self, v: &ScoreVector) -> Result<Prediction, PredictError>;
}

fn verdict(probability: f64) -> Prediction {
    Prediction { adversarial: decide(probability), probability }
}

impl Detector for ThresholdModel {
    fn name(&self) -> String {
        format!("threshold[{}]", self.band)
    }

    fn required_bands(&self) -> Vec<usize> {
        canonical_index(self.band).into_iter().collect()
    }

    fn predict(&self, v: &ScoreVector) -> Result<Prediction, PredictError> {
        let idx = canonical_index(self.band)
            .ok_or_else(|| PredictError::Unfitted(format!("band {} is not canonical", self.band)))?;
        let adv = detect(v.epsilon(idx)?, self);
        Ok(Prediction { adversarial: adv, probability: f64::from(u8::from(adv)) })
    }
}

impl Detector for VotingModel {
    fn name(&self) -> String {
        format!("vote[k={}]", self.vote_threshold)
    }

    fn required_bands(&self) -> Vec<usize> {
        (0..NUM_BANDS).collect()
    }

    fn predict(&self, v: &ScoreVector) -> Result<Prediction, PredictError> {
        let votes = self.votes(v).map_err(|e| match e {
            crate::detection::DetectionError::Score(s) => PredictError::Score(s),
            other => PredictError::Unfitted(other.to_string()),
        })?;
        Ok(Prediction { adversarial: votes >= self.vote_threshold, probability: votes as f64 / NUM_BANDS as f64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorModel {
    Threshold(ThresholdModel),
    Majority(VotingModel),
    Ltv(VotingModel),
    Tree { root: TreeNode },
    Forest(ForestModel),
    Adaboost(AdaBoostModel),
    Gboost(GBoostModel),
}

impl DetectorModel {
    pub fn kind(&self) -> &'static str {
        match self {
            DetectorModel::Threshold(_) => "threshold",
            DetectorModel::Majority(_) => "majority",
            DetectorModel::Ltv(_) => "ltv",
            DetectorModel::Tree { .. } => "tree",
            DetectorModel::Forest(_) => "forest",
            DetectorModel::Adaboost(_) => "adaboost",
            DetectorModel::Gboost(_) => "gboost",
        }
    }

    /// Structural checks applied to models read from disk.
    pub fn validate(&self) -> Result<(), String> {
        let tree = |t: &TreeNode| t.validate().map_err(|e| e.to_string());
        match self {
            DetectorModel::Threshold(m) => {
                canonical_index(m.band).ok_or_else(|| format!("band {} is not canonical", m.band))?;
                if !m.threshold.is_finite() {
                    return Err("threshold is not finite".into());
                }
            }
            DetectorModel::Majority(m) | DetectorModel::Ltv(m) => {
                VotingModel::new(m.members.clone(), m.vote_threshold).map_err(|e| e.to_string())?;
                if matches!(self, DetectorModel::Majority(_)) && m.vote_threshold != MAJORITY_VOTES {
                    return Err(format!("majority model with k = {}", m.vote_threshold));
                }
            }
            DetectorModel::Tree { root } => tree(root)?,
            DetectorModel::Forest(f) => {
                if f.trees.is_empty() {
                    return Err("forest has no trees".into());
                }
                f.trees.iter().try_for_each(tree)?;
            }
            DetectorModel::Adaboost(m) => {
                for s in &m.stages {
                    if s.feature >= NUM_BANDS || !s.alpha.is_finite() || !s.threshold.is_finite() {
                        return Err(format!("invalid stump {s:?}"));
                    }
                }
            }
            DetectorModel::Gboost(m) => {
                if !m.prior.is_finite() || !m.learning_rate.is_finite() {
                    return Err("non-finite boosting parameters".into());
                }
                m.trees.iter().try_for_each(tree)?;
            }
        }
        Ok(())
    }

    fn probability(&self, x: &Features) -> Result<f64, PredictError> {
        Ok(match self {
            DetectorModel::Tree { root } => root.evaluate(x),
            DetectorModel::Forest(f) if f.trees.is_empty() => return Err(PredictError::Unfitted("forest has no trees".into())),
            DetectorModel::Forest(f) => f.probability(x),
            DetectorModel::Adaboost(m) => m.probability(x),
            DetectorModel::Gboost(m) => m.probability(x),
            _ => unreachable!("not a tree model"),
        })
    }
}

impl Detector for DetectorModel {
    fn name(&self) -> String {
        match self {
            DetectorModel::Threshold(m) => m.name(),
            DetectorModel::Majority(_) => "majority".into(),
            DetectorModel::Ltv(m) => format!("ltv[k={}]", m.vote_threshold),
            other => other.kind().into(),
        }
    }

    fn required_bands(&self) -> Vec<usize> {
        match self {
            DetectorModel::Threshold(m) => m.required_bands(),
            _ => (0..NUM_BANDS).collect(),
        }
    }

    fn predict(&self, v: &ScoreVector) -> Result<Prediction, PredictError> {
        match self {
            DetectorModel::Threshold(m) => m.predict(v),
            DetectorModel::Majority(m) | DetectorModel::Ltv(m) => m.predict(v),
            other => Ok(verdict(other.probability(&v.features()?)?)),
        }
    }
}

/// Where a model came from: enough to re-run its training and to check that
/// scores fed to it were computed the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub step: u32,
    pub eps_max: u32,
    pub training_rows: usize,
    pub dataset_sha256: String,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
    pub tool_version: String,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a model file (format {0:?})")]
    WrongFormat(String),
    #[error("unsupported model version {0} (expected {MODEL_VERSION})")]
    UnsupportedVersion(u32),
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub detector: DetectorModel,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn new(detector: DetectorModel, provenance: Provenance) -> Self {
        Self { format: MODEL_FORMAT.into(), version: MODEL_VERSION, detector, provenance }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("models serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let format = raw.get("format").and_then(|f| f.as_str()).unwrap_or_default();
        if format != MODEL_FORMAT {
            return Err(ModelError::WrongFormat(format.to_owned()));
        }
        let version = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_VERSION {
            return Err(ModelError::UnsupportedVersion(version));
        }
        let model: Self = serde_json::from_value(raw)?;
        model.detector.validate().map_err(ModelError::Invalid)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Digest identifying this exact model and its provenance.
    pub fn config_hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("models serialize").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::FrequencyBand;
    use crate::detection::TrainingStats;
    use crate::flooding::{FloodingScore, CANONICAL_BANDS};
    use crate::trees::{fit_adaboost, fit_forest, fit_gboost, fit_tree, ForestParams, GBoostParams, TrainSet, TreeParams};
    use rand::Rng;

    fn provenance() -> Provenance {
        Provenance {
            seed: 7,
            step: 50,
            eps_max: 2500,
            training_rows: 3,
            dataset_sha256: sha256_hex(b"x"),
            hyperparameters: BTreeMap::new(),
            tool_version: "test".into(),
        }
    }

    fn threshold(band: FrequencyBand, t: f64) -> ThresholdModel {
        ThresholdModel {
            threshold: t,
            band,
            stats: TrainingStats { info_gain: 0.3, n_adversarial: 2, n_benign: 1, degenerate: false },
        }
    }

    fn vector(f: Features) -> ScoreVector {
        ScoreVector::complete(f.map(|e| FloodingScore { epsilon: e as u32, flipped: true, calls_used: 2 }))
    }

    fn train_set() -> TrainSet {
        let mut rng = crate::seed::rng(2);
        let x: Vec<Features> = (0..60).map(|_| std::array::from_fn(|_| rng.gen_range(1..50) as f64 * 50.0)).collect();
        let y = x.iter().map(|r| r[1] + r[2] < 2400.0).collect();
        TrainSet::new(x, y).unwrap()
    }

    fn all_models() -> Vec<DetectorModel> {
        let t = train_set();
        let members: Vec<ThresholdModel> = CANONICAL_BANDS.iter().map(|&b| threshold(b, 700.0)).collect();
        vec![
            DetectorModel::Threshold(threshold(CANONICAL_BANDS[1], 150.0)),
            DetectorModel::Majority(VotingModel::majority(members.clone()).unwrap()),
            DetectorModel::Ltv(VotingModel::new(members, 4).unwrap()),
            DetectorModel::Tree { root: fit_tree(&t, &TreeParams::default()).unwrap() },
            DetectorModel::Forest(fit_forest(&t, &ForestParams { n_trees: 7, ..Default::default() }).unwrap()),
            DetectorModel::Adaboost(fit_adaboost(&t, 10).unwrap()),
            DetectorModel::Gboost(fit_gboost(&t, &GBoostParams { n_stages: 10, ..Default::default() }).unwrap()),
        ]
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let t = train_set();
        for d in all_models() {
            let file = ModelFile::new(d, provenance());
            let back = ModelFile::from_json(&file.to_json()).unwrap();
            assert_eq!(back, file);
            for r in &t.x {
                let v = vector(*r);
                assert_eq!(back.detector.predict(&v).unwrap(), file.detector.predict(&v).unwrap());
            }
            assert_eq!(back.config_hash(), file.config_hash());
        }
    }

    #[test]
    fn threshold_uses_its_band_only() {
        let d = DetectorModel::Threshold(threshold(CANONICAL_BANDS[1], 150.0));
        assert_eq!(d.required_bands(), vec![1]);
        let mut v = ScoreVector::default();
        v.scores[1] = Some(FloodingScore { epsilon: 100, flipped: true, calls_used: 3 });
        assert!(d.predict(&v).unwrap().adversarial);
        v.scores[1] = Some(FloodingScore { epsilon: 150, flipped: true, calls_used: 4 });
        assert!(!d.predict(&v).unwrap().adversarial);
        v.scores[1] = None;
        assert!(matches!(d.predict(&v), Err(PredictError::Score(_))));
    }

    #[test]
    fn tree_models_need_complete_vectors() {
        let d = &all_models()[3];
        assert!(matches!(d.predict(&ScoreVector::default()), Err(PredictError::Score(_))));
    }

    #[test]
    fn empty_forest_is_unfitted() {
        let d = DetectorModel::Forest(ForestModel { trees: vec![], seeds: vec![], max_features: 2 });
        assert!(matches!(d.predict(&vector([1.0; 5])), Err(PredictError::Unfitted(_))));
        let text = ModelFile::new(d, provenance()).to_json();
        assert!(matches!(ModelFile::from_json(&text), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn rejects_foreign_files() {
        let good = ModelFile::new(all_models().remove(0), provenance()).to_json();
        assert!(matches!(ModelFile::from_json(&good.replace("noiseflood-model", "other")), Err(ModelError::WrongFormat(_))));
        assert!(matches!(
            ModelFile::from_json(&good.replace("\"version\": 1", "\"version\": 9")),
            Err(ModelError::UnsupportedVersion(9))
        ));
        assert!(matches!(ModelFile::from_json("{"), Err(ModelError::Json(_))));
        let bad_band = good.replace("\"0-2000\"", "\"0-3000\"");
        assert!(ModelFile::from_json(&bad_band).is_err());
    }

    #[test]
    fn names() {
        let names: Vec<String> = all_models().iter().map(|d| d.name()).collect();
        assert_eq!(names, ["threshold[0-2000]", "majority", "ltv[k=4]", "tree", "forest", "adaboost", "gboost"]);
    }
}
