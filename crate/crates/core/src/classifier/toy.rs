use crate::audio::AudioSignal;
use crate::spectrum;

use super::{Classifier, ClassifierError, Label};

/// Labels a signal by the sub-band holding the most weighted spectral energy.
///
/// The spectrum is split at `band_edges` (Hz). Band `i` collects the one-sided
/// DFT bins with `edges[i] <= f < edges[i + 1]`; the last band also takes its
/// upper edge. The prediction is the label of `argmax_i weights[i] * E_i`,
/// ties going to the lowest index.
///
/// Because noise injected into a rival band raises only that band's energy,
/// the flip amplitude of this model can be computed in closed form, which
/// makes it a usable stand-in for a trained network in tests.
#[derive(Debug, Clone)]
pub struct BandEnergyToyClassifier {
    band_edges: Vec<u32>,
    labels: Vec<Label>,
    weights: Vec<f64>,
}

impl BandEnergyToyClassifier {
    pub fn new(band_edges: Vec<u32>, labels: Vec<Label>, weights: Vec<f64>) -> Result<Self, ClassifierError> {
        let k = labels.len();
        if k == 0 {
            return Err(ClassifierError::InvalidConfig("at least one band is required".into()));
        }
        if band_edges.len() != k + 1 {
            return Err(ClassifierError::InvalidConfig(format!(
                "{} band edges given for {k} labels; need {}",
                band_edges.len(),
                k + 1
            )));
        }
        if band_edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ClassifierError::InvalidConfig("band edges must be strictly increasing".into()));
        }
        if weights.len() != k || weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(ClassifierError::InvalidConfig(format!("need {k} positive finite weights")));
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != k {
            return Err(ClassifierError::InvalidConfig("labels must be distinct".into()));
        }
        Ok(Self { band_edges, labels, weights })
    }

    /// Four equal-weight bands quartering 0–8000 Hz.
    pub fn speech_bands() -> Self {
        Self::new(
            vec![0, 2000, 4000, 6000, 8000],
            ["low", "lowmid", "highmid", "high"].into_iter().map(Label::from).collect(),
            vec![1.0; 4],
        )
        .expect("static configuration is valid")
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, ClassifierError> {
        self.weights = weights;
        Self::new(self.band_edges, self.labels, self.weights)
    }

    pub fn band_edges(&self) -> &[u32] {
        &self.band_edges
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unweighted spectral energy per sub-band.
    pub fn band_energies(&self, x: &AudioSignal) -> Vec<f64> {
        let n = x.len();
        let rate = x.sample_rate() as u64;
        let spec = spectrum::forward(&x.to_f64());
        let k = self.labels.len();
        let last_edge = *self.band_edges.last().unwrap() as u64 * n as u64;
        let mut energies = vec![0.0; k];
        let mut band = 0;
        for (bin, value) in spec.iter().enumerate().take(n / 2 + 1) {
            // bin frequency is bin * rate / n; compare scaled by n
            let f = bin as u64 * rate;
            if f > last_edge {
                break;
            }
            while band + 1 < k && f >= self.band_edges[band + 1] as u64 * n as u64 {
                band += 1;
            }
            if f >= self.band_edges[band] as u64 * n as u64 {
                energies[band] += value.norm_sqr();
            }
        }
        energies
    }

    /// Index of the winning band.
    pub fn predict_band(&self, x: &AudioSignal) -> usize {
        let energies = self.band_energies(x);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, (e, w)) in energies.iter().zip(&self.weights).enumerate() {
            let score = e * w;
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }
}

impl Classifier for BandEnergyToyClassifier {
    fn vocabulary(&self) -> &[Label] {
        &self.labels
    }

    fn classify(&self, x: &AudioSignal) -> Result<Label, ClassifierError> {
        Ok(self.labels[self.predict_band(x)].clone())
    }
}
