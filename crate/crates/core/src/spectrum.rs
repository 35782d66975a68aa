//! Thin FFT helpers shared by the band-pass filter and the toy classifier.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Forward DFT of a real sequence (unnormalized).
pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if !buf.is_empty() {
        plan(buf.len(), false).process(&mut buf);
    }
    buf
}

/// Inverse DFT, normalized by `1/n` so that `inverse(forward(x)) == x`.
pub fn inverse(mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
    let n = spectrum.len();
    if n == 0 {
        return spectrum;
    }
    plan(n, true).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    for c in &mut spectrum {
        *c *= scale;
    }
    spectrum
}

/// Frequency of DFT bin `k` for a length-`n` transform, folded onto `[0, rate/2]`.
///
/// Returned as the exact rational `numerator / n` so callers can compare
/// against integer band edges without rounding: the bin frequency is
/// `numerator / n` Hz.
pub(crate) fn folded_bin_numerator(k: usize, n: usize, sample_rate: u32) -> u64 {
    let folded = if k <= n / 2 { k } else { n - k };
    folded as u64 * sample_rate as u64
}

/// One-sided power spectrum: `(bin frequency in Hz, |X_k|^2)` for `k = 0..=n/2`.
pub fn power_spectrum(values: &[f64], sample_rate: u32) -> Vec<(f64, f64)> {
    let n = values.len();
    let spec = forward(values);
    (0..=n / 2)
        .map(|k| {
            let hz = k as f64 * sample_rate as f64 / n as f64;
            (hz, spec[k].norm_sqr())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_roundtrip() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
        let back = inverse(forward(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-9);
            assert!(b.im.abs() < 1e-9);
        }
    }

    #[test]
    fn folded_bins_mirror() {
        // n = 8 at 16 kHz: bins are 2 kHz apart; bin 6 mirrors bin 2.
        assert_eq!(folded_bin_numerator(2, 8, 16000), folded_bin_numerator(6, 8, 16000));
        assert_eq!(folded_bin_numerator(4, 8, 16000) / 8, 8000);
    }
}
