//! The flooding-score search and per-band score vectors.
//!
//! A flooding score is the smallest noise bound `eps` (on a grid of step `s`)
//! at which adding band-limited uniform noise changes the classifier's
//! prediction:
//!
//! ```text
//! pred_orig = classify(x); eps = 0
//! while pred == pred_orig and eps < eps_max:
//!     eps += s
//!     noise = uniform integers in [-eps, eps], band-pass filtered
//!     pred = classify(x + noise)
//! ```
//!
//! The noise drawn at level `eps` comes from a generator seeded by
//! `seed::derive(cfg.seed, STREAM_EPSILON, eps)`. Each iteration therefore
//! draws fresh noise, and a given level sees the same realization whatever
//! the step size, which makes searches at different resolutions comparable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, band_pass, generate_noise, mix, AudioError, AudioSignal, FrequencyBand, NoiseArray};
use crate::classifier::{ClassifierError, ClassifierHandle, Label};
use crate::dataset::Manifest;
use crate::seed;

pub const DEFAULT_STEP: u32 = 50;
pub const DEFAULT_EPS_MAX: u32 = 2500;

/// Number of entries in a score vector.
pub const NUM_BANDS: usize = 5;

/// Canonical band order of a score vector: unfiltered, then the four equal
/// quarters of 0–8000 Hz.
pub const CANONICAL_BANDS: [FrequencyBand; NUM_BANDS] = [
    FrequencyBand::Unfiltered,
    FrequencyBand::Range { low_hz: 0, high_hz: 2000 },
    FrequencyBand::Range { low_hz: 2000, high_hz: 4000 },
    FrequencyBand::Range { low_hz: 4000, high_hz: 6000 },
    FrequencyBand::Range { low_hz: 6000, high_hz: 8000 },
];

/// Column suffixes for each canonical band.
pub const BAND_KEYS: [&str; NUM_BANDS] = ["unfiltered", "0_2000", "2000_4000", "4000_6000", "6000_8000"];

pub fn canonical_index(band: FrequencyBand) -> Option<usize> {
    CANONICAL_BANDS.iter().position(|b| *b == band)
}

#[derive(Debug, Error)]
pub enum FloodingError {
    #[error("invalid flooding configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloodingConfig {
    pub step: u32,
    pub eps_max: u32,
    pub band: FrequencyBand,
    pub seed: u64,
}

impl Default for FloodingConfig {
    fn default() -> Self {
        Self { step: DEFAULT_STEP, eps_max: DEFAULT_EPS_MAX, band: FrequencyBand::Unfiltered, seed: 0 }
    }
}

impl FloodingConfig {
    pub fn new(step: u32, eps_max: u32, band: FrequencyBand, seed: u64) -> Result<Self, FloodingError> {
        let cfg = Self { step, eps_max, band, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FloodingError> {
        if self.step == 0 {
            return Err(FloodingError::InvalidConfig("step size must be at least 1".into()));
        }
        if self.eps_max < self.step {
            return Err(FloodingError::InvalidConfig(format!(
                "eps_max ({}) must be at least the step size ({})",
                self.eps_max, self.step
            )));
        }
        Ok(())
    }

    /// Largest value the search can return: the first multiple of `step`
    /// that is at least `eps_max`.
    pub fn cap(&self) -> u32 {
        self.eps_max.div_ceil(self.step) * self.step
    }

    /// Upper bound on classifier calls made inside the search loop.
    pub fn max_loop_calls(&self) -> u32 {
        self.eps_max.div_ceil(self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloodingScore {
    /// Smallest tested bound that changed the prediction, or the capped
    /// final bound when none did.
    pub epsilon: u32,
    pub flipped: bool,
    /// Classifier invocations, including the initial unperturbed one.
    pub calls_used: u32,
}

/// The band-limited noise used at level `epsilon`.
pub fn noise_at_level(
    n: usize,
    epsilon: u32,
    band: FrequencyBand,
    sample_rate: u32,
    base_seed: u64,
) -> Result<NoiseArray, AudioError> {
    let mut rng = seed::rng(seed::derive(base_seed, seed::STREAM_EPSILON, epsilon as u64));
    let raw = generate_noise(n, epsilon, &mut rng);
    band_pass(&raw, band, sample_rate)
}

/// Runs the flooding search on one signal for one band.
pub fn flooding_score(x: &AudioSignal, m: &ClassifierHandle, cfg: &FloodingConfig) -> Result<FloodingScore, FloodingError> {
    cfg.validate()?;
    cfg.band.check_nyquist(x.sample_rate())?;

    let original = m.classify(x)?;
    let mut calls = 1;
    let mut epsilon = 0;
    let mut flipped = false;
    while !flipped && epsilon < cfg.eps_max {
        epsilon += cfg.step;
        let noise = noise_at_level(x.len(), epsilon, cfg.band, x.sample_rate(), cfg.seed)?;
        let pred = m.classify(&mix(x, &noise)?)?;
        calls += 1;
        flipped = pred != original;
    }
    Ok(FloodingScore { epsilon, flipped, calls_used: calls })
}

/// Flooding scores of one signal in the canonical band order.
///
/// Slots for bands that were not computed are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: [Option<FloodingScore>; NUM_BANDS],
    pub is_adversarial: Option<bool>,
    pub source: Option<Label>,
    pub target: Option<Label>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoreVectorError {
    #[error("band {0} is not part of the canonical band plan")]
    UnknownBand(FrequencyBand),
    #[error("band {0} appears out of canonical order")]
    OutOfOrder(FrequencyBand),
    #[error("score for band {0} is missing")]
    MissingBand(FrequencyBand),
}

impl ScoreVector {
    pub fn complete(scores: [FloodingScore; NUM_BANDS]) -> Self {
        Self { scores: scores.map(Some), ..Default::default() }
    }

    /// Builds a vector from `(band, score)` pairs, which must follow the
    /// canonical band order (a subset is allowed, a permutation is not).
    pub fn from_pairs(pairs: &[(FrequencyBand, FloodingScore)]) -> Result<Self, ScoreVectorError> {
        let mut v = Self::default();
        let mut next = 0;
        for (band, score) in pairs {
            let idx = canonical_index(*band).ok_or(ScoreVectorError::UnknownBand(*band))?;
            if idx < next {
                return Err(ScoreVectorError::OutOfOrder(*band));
            }
            v.scores[idx] = Some(*score);
            next = idx + 1;
        }
        Ok(v)
    }

    pub fn with_truth(mut self, is_adversarial: Option<bool>, source: Option<Label>, target: Option<Label>) -> Self {
        self.is_adversarial = is_adversarial;
        self.source = source;
        self.target = target;
        self
    }

    pub fn epsilon(&self, band_index: usize) -> Result<f64, ScoreVectorError> {
        self.scores[band_index]
            .map(|s| s.epsilon as f64)
            .ok_or(ScoreVectorError::MissingBand(CANONICAL_BANDS[band_index]))
    }

    /// All five scores as features; fails if any band is missing.
    pub fn features(&self) -> Result<[f64; NUM_BANDS], ScoreVectorError> {
        let mut out = [0.0; NUM_BANDS];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.epsilon(i)?;
        }
        Ok(out)
    }

    pub fn is_complete(&self) -> bool {
        self.scores.iter().all(Option::is_some)
    }
}

/// Seed used for canonical band `index` within a score vector.
pub fn band_seed(base_seed: u64, index: usize) -> u64 {
    seed::derive(base_seed, seed::STREAM_BAND, index as u64)
}

/// Scores `x` on every canonical band. `base_cfg.band` is ignored.
pub fn score_vector(x: &AudioSignal, m: &ClassifierHandle, base_cfg: &FloodingConfig) -> Result<ScoreVector, FloodingError> {
    score_vector_bands(x, m, base_cfg, &[0, 1, 2, 3, 4])
}

/// Scores `x` on the listed canonical band indices only.
pub fn score_vector_bands(
    x: &AudioSignal,
    m: &ClassifierHandle,
    base_cfg: &FloodingConfig,
    bands: &[usize],
) -> Result<ScoreVector, FloodingError> {
    base_cfg.validate()?;
    let mut v = ScoreVector::default();
    for &idx in bands {
        let band = *CANONICAL_BANDS
            .get(idx)
            .ok_or_else(|| FloodingError::InvalidConfig(format!("band index {idx} out of range")))?;
        let cfg = FloodingConfig { band, seed: band_seed(base_cfg.seed, idx), ..*base_cfg };
        v.scores[idx] = Some(flooding_score(x, m, &cfg)?);
    }
    Ok(v)
}

/// Seed used for manifest row `index`.
pub fn row_seed(base_seed: u64, index: usize) -> u64 {
    seed::derive(base_seed, seed::STREAM_ROW, index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub id: String,
    pub path: String,
    pub vector: ScoreVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// The audio could not be read or was incompatible with a band.
    Audio,
    /// The classifier failed while scoring the row.
    Classifier,
    Config,
}

#[derive(Debug, Clone)]
pub struct RowFailure {
    pub index: usize,
    pub id: String,
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetScores {
    pub rows: Vec<ScoredRow>,
    pub failures: Vec<RowFailure>,
}

/// Scores every manifest row on the listed bands using `workers` threads.
///
/// Row `i` uses [`row_seed`]`(base_cfg.seed, i)`, so output is identical for
/// any worker count. Failing rows are collected, never fatal.
pub fn score_dataset(
    manifest: &Manifest,
    m: &ClassifierHandle,
    base_cfg: &FloodingConfig,
    bands: &[usize],
    workers: usize,
) -> Result<DatasetScores, FloodingError> {
    base_cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| FloodingError::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    let results: Vec<Result<ScoredRow, RowFailure>> = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .enumerate()
            .map(|(index, row)| {
                let fail = |kind, message: String| RowFailure { index, id: row.id.clone(), kind, message };
                let path = manifest.resolve(&row.path);
                let x = audio::load_wav(&path).map_err(|e| fail(FailureKind::Audio, format!("{}: {e}", path.display())))?;
                let cfg = FloodingConfig { seed: row_seed(base_cfg.seed, index), ..*base_cfg };
                let vector = score_vector_bands(&x, m, &cfg, bands).map_err(|e| {
                    let kind = match e {
                        FloodingError::Classifier(_) => FailureKind::Classifier,
                        FloodingError::Audio(_) => FailureKind::Audio,
                        FloodingError::InvalidConfig(_) => FailureKind::Config,
                    };
                    fail(kind, e.to_string())
                })?;
                Ok(ScoredRow {
                    id: row.id.clone(),
                    path: row.path.clone(),
                    vector: vector.with_truth(row.is_adversarial, row.source.clone(), row.target.clone()),
                })
            })
            .collect()
    });

    let mut out = DatasetScores::default();
    for r in results {
        match r {
            Ok(row) => out.rows.push(row),
            Err(f) => {
                log::warn!("row {} ({}) failed: {}", f.index, f.id, f.message);
                out.failures.push(f);
            }
        }
    }
    Ok(out)
}
