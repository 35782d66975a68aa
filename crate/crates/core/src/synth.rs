//! Synthetic "fragile" and "robust" signals for the band-energy toy
//! classifier.
//!
//! Every example is a sum of four sinusoids, one inside each quarter of
//! 0–8000 Hz, at frequencies on the DFT bin grid (so each tone's energy lands
//! in exactly one bin) and a margin away from the band edges. One band, the
//! *winner*, holds the loudest tone `A_c`; every other band `j` holds a tone
//! `A_j = ρ_j·A_c`.
//!
//! * fragile (adversarial): `A_c ∈ [600, 1200]`, `ρ_j ∈ [0.97, 0.995]`
//! * robust (benign): `A_c ∈ [1500, 3000]`, `ρ_j ∈ [0, 0.9]`
//!
//! Uniform noise on `[−ε, ε]` band-limited to band `j` adds about `ε²/12` per
//! sample of energy to band `j` and none to the others, while tone `A`
//! contributes `A²/2`. The toy classifier's label therefore flips to band `j`
//! once `A_j²/2 + ε²/12 > A_c²/2`, i.e. at
//! `ε_j ≈ √(6·(A_c² − A_j²))` — a few hundred for fragile examples and well
//! above a thousand (often beyond the search cap) for robust ones. Flooding
//! the winner's own band never flips it.
//!
//! Adversarial rows are labelled with the winner as target (what the
//! classifier outputs) and the runner-up as source.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::audio::{save_wav, AudioError, AudioSignal, CANONICAL_SAMPLE_RATE};
use crate::classifier::{BandEnergyToyClassifier, Label};
use crate::dataset::{DatasetError, Manifest, ManifestRow};
use crate::seed;

pub const TONE_BANDS: usize = 4;
pub const BAND_WIDTH_HZ: u32 = 2000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("cannot create {0}: {1}")]
    Io(String, std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Fragile,
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub n_samples: usize,
    pub sample_rate: u32,
    /// Distance kept between a tone and its band edges.
    pub margin_hz: u32,
    pub fragile_amplitude: (f64, f64),
    pub fragile_ratio: (f64, f64),
    pub robust_amplitude: (f64, f64),
    pub robust_ratio: (f64, f64),
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_samples: 4000,
            sample_rate: CANONICAL_SAMPLE_RATE,
            margin_hz: 200,
            fragile_amplitude: (600.0, 1200.0),
            fragile_ratio: (0.97, 0.995),
            robust_amplitude: (1500.0, 3000.0),
            robust_ratio: (0.0, 0.9),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthExample {
    pub kind: Kind,
    pub signal: AudioSignal,
    /// Tone band holding the loudest tone.
    pub winner: usize,
    /// Tone band holding the second loudest tone.
    pub runner_up: usize,
    pub amplitudes: [f64; TONE_BANDS],
    pub frequencies_hz: [f64; TONE_BANDS],
}

impl SynthExample {
    /// Approximate flooding score when noise is confined to tone band
    /// `band`; `None` for the winner's band, which never flips.
    pub fn predicted_flip_epsilon(&self, band: usize) -> Option<f64> {
        (band != self.winner)
            .then(|| (6.0 * (self.amplitudes[self.winner].powi(2) - self.amplitudes[band].powi(2))).sqrt())
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

pub fn generate(kind: Kind, params: &SynthParams, seed: u64) -> Result<SynthExample, SynthError> {
    let mut rng = seed::rng(seed);
    let (amp, ratio) = match kind {
        Kind::Fragile => (params.fragile_amplitude, params.fragile_ratio),
        Kind::Robust => (params.robust_amplitude, params.robust_ratio),
    };
    let winner = rng.gen_range(0..TONE_BANDS);
    let a_c = uniform(&mut rng, amp);
    let amplitudes: [f64; TONE_BANDS] =
        std::array::from_fn(|b| if b == winner { a_c } else { a_c * uniform(&mut rng, ratio) });

    // frequencies on the bin grid sr / n
    let n = params.n_samples;
    let sr = params.sample_rate as f64;
    let bin_hz = sr / n as f64;
    let frequencies_hz: [f64; TONE_BANDS] = std::array::from_fn(|b| {
        let lo = (b as u32 * BAND_WIDTH_HZ + params.margin_hz) as f64;
        let hi = ((b as u32 + 1) * BAND_WIDTH_HZ - params.margin_hz) as f64;
        let k = rng.gen_range((lo / bin_hz).ceil() as u64..=(hi / bin_hz).floor() as u64);
        k as f64 * bin_hz
    });
    let phases: [f64; TONE_BANDS] = std::array::from_fn(|_| rng.gen_range(0.0..TAU));

    let samples = (0..n)
        .map(|t| {
            let v: f64 = (0..TONE_BANDS)
                .map(|b| amplitudes[b] * (TAU * frequencies_hz[b] * t as f64 / sr + phases[b]).sin())
                .sum();
            v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
        })
        .collect();

    let runner_up = (0..TONE_BANDS)
        .filter(|&b| b != winner)
        .max_by(|&a, &b| amplitudes[a].total_cmp(&amplitudes[b]))
        .expect("three rival bands");
    Ok(SynthExample {
        kind,
        signal: AudioSignal::new(samples, params.sample_rate)?,
        winner,
        runner_up,
        amplitudes,
        frequencies_hz,
    })
}

/// Seed of example `index` of a synthetic set.
pub fn example_seed(base: u64, index: usize) -> u64 {
    seed::derive(base, seed::STREAM_SYNTH, index as u64)
}

/// `n_fragile` then `n_robust` examples drawn from one base seed.
pub fn generate_set(n_fragile: usize, n_robust: usize, params: &SynthParams, seed: u64) -> Result<Vec<SynthExample>, SynthError> {
    (0..n_fragile + n_robust)
        .map(|i| generate(if i < n_fragile { Kind::Fragile } else { Kind::Robust }, params, example_seed(seed, i)))
        .collect()
}

/// Writes the examples as WAV files under `dir/wav/` plus `dir/manifest.csv`,
/// labelled with the toy classifier's band labels.
pub fn write_dataset(dir: &Path, examples: &[SynthExample]) -> Result<Manifest, SynthError> {
    let wav_dir = dir.join("wav");
    fs::create_dir_all(&wav_dir).map_err(|e| SynthError::Io(wav_dir.display().to_string(), e))?;
    let labels: Vec<Label> = BandEnergyToyClassifier::speech_bands().labels().to_vec();
    let mut rows = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let adversarial = ex.kind == Kind::Fragile;
        let id = format!("{}_{i:04}", if adversarial { "fragile" } else { "robust" });
        let path = format!("wav/{id}.wav");
        save_wav(&ex.signal, dir.join(&path))?;
        rows.push(ManifestRow {
            id,
            path,
            is_adversarial: Some(adversarial),
            source: adversarial.then(|| labels[ex.runner_up].clone()),
            target: adversarial.then(|| labels[ex.winner].clone()),
        });
    }
    let manifest = Manifest { base_dir: dir.to_path_buf(), rows };
    manifest.save(dir.join("manifest.csv"))?;
    Ok(manifest)
}
