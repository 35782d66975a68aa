//! PCM audio signals, bounded uniform noise, band-limiting and mixing.
//!
//! Everything here is a pure function of its inputs; random noise takes the
//! generator as an argument so callers control seeding.

mod filter;
mod wav;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::band_pass;
pub use wav::{decode_wav, encode_wav, load_wav, save_wav};

/// Sample rate of the canonical speech-command datasets.
pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("band upper edge {high_hz} Hz exceeds the Nyquist frequency {nyquist_hz} Hz")]
    BandAboveNyquist { high_hz: u32, nyquist_hz: u32 },
    #[error("invalid frequency band: {0}")]
    InvalidBand(String),
    #[error("length mismatch: signal has {signal} samples, noise has {noise}")]
    LengthMismatch { signal: usize, noise: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono 16-bit PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioSignal {
    samples: Vec<i16>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::InvalidSignal("signal has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(AudioError::InvalidSignal("sample rate must be positive".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; signals hold at least one sample.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nyquist_hz(&self) -> u32 {
        self.sample_rate / 2
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

/// Frequency range that injected noise is confined to.
///
/// Edges are inclusive. `Unfiltered` skips the filter stage entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FrequencyBand {
    Unfiltered,
    Range { low_hz: u32, high_hz: u32 },
}

impl FrequencyBand {
    pub fn range(low_hz: u32, high_hz: u32) -> Result<Self, AudioError> {
        if high_hz <= low_hz {
            return Err(AudioError::InvalidBand(format!(
                "upper edge {high_hz} Hz must exceed lower edge {low_hz} Hz"
            )));
        }
        Ok(Self::Range { low_hz, high_hz })
    }

    pub fn is_unfiltered(&self) -> bool {
        matches!(self, Self::Unfiltered)
    }

    /// Rejects bands whose upper edge lies above half of `sample_rate`.
    pub fn check_nyquist(&self, sample_rate: u32) -> Result<(), AudioError> {
        match *self {
            Self::Unfiltered => Ok(()),
            Self::Range { high_hz, .. } => {
                // compare 2*high against rate so odd rates are handled exactly
                if 2 * high_hz as u64 > sample_rate as u64 {
                    Err(AudioError::BandAboveNyquist { high_hz, nyquist_hz: sample_rate / 2 })
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unfiltered => f.write_str("unfiltered"),
            Self::Range { low_hz, high_hz } => write!(f, "{low_hz}-{high_hz}"),
        }
    }
}

impl FromStr for FrequencyBand {
    type Err = AudioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unfiltered") {
            return Ok(Self::Unfiltered);
        }
        let (lo, hi) = s
            .split_once('-')
            .ok_or_else(|| AudioError::InvalidBand(format!("expected `unfiltered` or `LOW-HIGH`, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| AudioError::InvalidBand(format!("bad band edge `{v}` in `{s}`")))
        };
        Self::range(parse(lo)?, parse(hi)?)
    }
}

impl From<FrequencyBand> for String {
    fn from(b: FrequencyBand) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for FrequencyBand {
    type Error = AudioError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Real-valued noise amplitudes, one per target sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseArray(pub Vec<f64>);

impl NoiseArray {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `n` independent integers drawn uniformly from `[-epsilon, epsilon]`.
pub fn generate_noise<R: Rng + ?Sized>(n: usize, epsilon: u32, rng: &mut R) -> NoiseArray {
    let eps = epsilon as i64;
    if eps == 0 {
        return NoiseArray::zeros(n);
    }
    NoiseArray((0..n).map(|_| rng.gen_range(-eps..=eps) as f64).collect())
}

/// Adds `noise` to `signal`, rounding half away from zero and saturating to
/// the 16-bit range. The input signal is left untouched.
pub fn mix(signal: &AudioSignal, noise: &NoiseArray) -> Result<AudioSignal, AudioError> {
    if signal.len() != noise.len() {
        return Err(AudioError::LengthMismatch { signal: signal.len(), noise: noise.len() });
    }
    let samples = signal
        .samples
        .iter()
        .zip(&noise.0)
        .map(|(&s, &n)| {
            let v = (s as f64 + n).round();
            v.clamp(i16::MIN as f64, i16::MAX as f64) as i16
        })
        .collect();
    Ok(AudioSignal { samples, sample_rate: signal.sample_rate })
}
