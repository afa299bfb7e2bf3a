//! Fixed 13-dimensional feature vector per window: shape moments,
//! zero-crossing rate, spectral band powers, heart rate, and an ST
//! offset estimate around each detected beat. The last entry flags
//! windows where beat detection failed, so downstream models can
//! learn to distrust the beat-derived features there.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::dsp::detect_r_peaks;

pub const FEATURE_COUNT: usize = 13;

/// Relative-power bands in Hz: baseline wander / low, QRS-dominant,
/// high-frequency.
const BANDS: [(f64, f64); 3] = [(0.5, 4.0), (4.0, 15.0), (15.0, 40.0)];

/// Sample offsets around a detected R peak used for the ST estimate:
/// signal at R + 80 ms minus signal at R - 40 ms (isoelectric point).
const ST_BEFORE_SECS: f64 = 0.040;
const ST_AFTER_SECS: f64 = 0.080;

pub fn feature_names() -> [&'static str; FEATURE_COUNT] {
    [
        "mean",
        "std",
        "skewness",
        "kurtosis",
        "rms",
        "zero_crossing_rate",
        "band_power_low",
        "band_power_mid",
        "band_power_high",
        "heart_rate_bpm",
        "st_offset_mean",
        "st_offset_std",
        "missing_beats",
    ]
}

fn moments(signal: &[f64]) -> (f64, f64, f64, f64) {
    let n = signal.len() as f64;
    let mean = signal.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in signal {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skew, kurt) = if m2 > 1e-24 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    (mean, m2.sqrt(), skew, kurt)
}

fn zero_crossing_rate(signal: &[f64]) -> f64 {
    if signal.len() < 2 {
        return 0.0;
    }
    let crossings = signal.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    crossings as f64 / (signal.len() - 1) as f64
}

/// Fraction of (non-DC) periodogram power inside each band.
fn band_powers(signal: &[f64], rate: f64) -> [f64; 3] {
    let n = signal.len();
    if n < 4 {
        return [0.0; 3];
    }
    let mut buf: Vec<Complex<f64>> =
        signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut total = 0.0f64;
    let mut in_band = [0.0f64; 3];
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1).skip(1) {
        let power = c.norm_sqr();
        total += power;
        let freq = k as f64 * rate / n as f64;
        for (band, acc) in BANDS.iter().zip(in_band.iter_mut()) {
            if freq >= band.0 && freq < band.1 {
                *acc += power;
            }
        }
    }
    if total <= 0.0 {
        return [0.0; 3];
    }
    [in_band[0] / total, in_band[1] / total, in_band[2] / total]
}

pub fn extract_features(signal: &[f64], rate: f64) -> [f64; FEATURE_COUNT] {
    assert!(rate > 0.0);
    if signal.is_empty() {
        return [0.0; FEATURE_COUNT];
    }
    let n = signal.len() as f64;
    let (mean, std, skew, kurt) = moments(signal);
    let rms = (signal.iter().map(|&v| v * v).sum::<f64>() / n).sqrt();
    let zcr = zero_crossing_rate(signal);
    let bands = band_powers(signal, rate);

    let peaks = detect_r_peaks(signal, rate);
    let missing = if peaks.len() < 2 { 1.0 } else { 0.0 };
    let heart_rate = if peaks.len() >= 2 {
        let span_secs = (peaks[peaks.len() - 1] - peaks[0]) as f64 / rate;
        (peaks.len() - 1) as f64 / span_secs * 60.0
    } else {
        0.0
    };

    let before = (ST_BEFORE_SECS * rate).round() as usize;
    let after = (ST_AFTER_SECS * rate).round() as usize;
    let offsets: Vec<f64> = peaks
        .iter()
        .filter(|&&p| p >= before && p + after < signal.len())
        .map(|&p| signal[p + after] - signal[p - before])
        .collect();
    let (st_mean, st_std) = if offsets.is_empty() {
        (0.0, 0.0)
    } else {
        let m = offsets.iter().sum::<f64>() / offsets.len() as f64;
        let var = offsets.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / offsets.len() as f64;
        (m, var.sqrt())
    };

    [
        mean, std, skew, kurt, rms, zcr, bands[0], bands[1], bands[2], heart_rate, st_mean,
        st_std, missing,
    ]
}
