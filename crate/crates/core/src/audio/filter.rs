//! Brick-wall band-pass filtering in the frequency domain.

use rustfft::num_complex::Complex64;

use super::{AudioError, FrequencyBand, NoiseArray};
use crate::spectrum;

/// Confines `noise` to `band`.
///
/// Takes the DFT, zeroes every bin whose (folded) frequency lies strictly
/// outside `[low_hz, high_hz]`, and returns the real part of the inverse DFT.
/// Bins exactly on an edge are kept. `Unfiltered` returns the input as is.
pub fn band_pass(noise: &NoiseArray, band: FrequencyBand, sample_rate: u32) -> Result<NoiseArray, AudioError> {
    band.check_nyquist(sample_rate)?;
    let FrequencyBand::Range { low_hz, high_hz } = band else {
        return Ok(noise.clone());
    };
    let n = noise.len();
    if n == 0 {
        return Ok(noise.clone());
    }
    let lo = low_hz as u64 * n as u64;
    let hi = high_hz as u64 * n as u64;
    let mut spec = spectrum::forward(noise.values());
    for (k, bin) in spec.iter_mut().enumerate() {
        let f = spectrum::folded_bin_numerator(k, n, sample_rate);
        if f < lo || f > hi {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    Ok(NoiseArray(spectrum::inverse(spec).into_iter().map(|c| c.re).collect()))
}
