//! Windowed-sinc FIR design and zero-phase application.

use super::{mirror_index, DspError};
use crate::config::{FilterKind, FilterSpec};

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn hamming(n: usize, taps: usize) -> f64 {
    if taps == 1 {
        return 1.0;
    }
    let m = (taps - 1) as f64;
    0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / m).cos()
}

/// Hamming-windowed sinc lowpass kernel, normalized to unit DC gain.
pub fn lowpass_kernel(cutoff_hz: f64, rate_hz: f64, taps: usize) -> Vec<f64> {
    assert!(taps % 2 == 1 && taps >= 1, "taps must be odd");
    let fc = cutoff_hz / rate_hz; // cycles per sample
    let center = (taps / 2) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| 2.0 * fc * sinc(2.0 * fc * (n as f64 - center)) * hamming(n, taps))
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    h
}

/// Bandpass kernel as the difference of two lowpass kernels
/// (zero DC gain, unit mid-band gain approximately).
pub fn bandpass_kernel(low_hz: f64, high_hz: f64, rate_hz: f64, taps: usize) -> Vec<f64> {
    let upper = lowpass_kernel(high_hz, rate_hz, taps);
    let lower = lowpass_kernel(low_hz, rate_hz, taps);
    upper.iter().zip(&lower).map(|(u, l)| u - l).collect()
}

/// "Same"-length convolution with mirror-reflected edges. The kernel
/// is centered, so symmetric kernels introduce no phase shift.
pub fn convolve_same(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    assert!(!signal.is_empty() && !kernel.is_empty());
    let center = (kernel.len() / 2) as isize;
    let n = signal.len();
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &k) in kernel.iter().enumerate() {
            let src = i as isize + j as isize - center;
            acc += k * signal[mirror_index(src, n)];
        }
        *slot = acc;
    }
    out
}

/// Zero-phase lowpass: the windowed-sinc kernel from `spec` applied
/// forward then backward. Output length equals input length.
pub fn lowpass(signal: &[f64], rate_hz: f64, spec: &FilterSpec) -> Result<Vec<f64>, DspError> {
    if signal.is_empty() {
        return Err(DspError::EmptyInput);
    }
    if spec.kind != FilterKind::LowpassFir {
        return Err(DspError::InvalidSpec(format!("expected a lowpass_fir spec, got {:?}", spec.kind)));
    }
    spec.validate(rate_hz)
        .map_err(|e| DspError::InvalidSpec(e.to_string()))?;
    let kernel = lowpass_kernel(spec.cutoff_hz, rate_hz, spec.taps);
    let forward = convolve_same(signal, &kernel);
    let mut reversed: Vec<f64> = forward.into_iter().rev().collect();
    reversed = convolve_same(&reversed, &kernel);
    reversed.reverse();
    Ok(reversed)
}
