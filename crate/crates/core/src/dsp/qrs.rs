//! R-peak detection, Pan-Tompkins style.
//!
//! Pipeline: 5-15 Hz bandpass -> derivative -> squaring -> 150 ms
//! moving integration -> adaptive signal/noise thresholds with a
//! 200 ms refractory period. Peak positions are refined against the
//! squared bandpassed signal, so the reported index sits on the R wave
//! rather than on the smeared integration bump.

use super::fir::{bandpass_kernel, convolve_same};
use super::mirror_index;

const BAND_LOW_HZ: f64 = 5.0;
const BAND_HIGH_HZ: f64 = 15.0;
const INTEGRATION_SECS: f64 = 0.150;
const REFRACTORY_SECS: f64 = 0.200;

/// Detects R peaks and returns their sample indices, strictly
/// increasing and at least 200 ms apart. May return an empty list.
pub fn detect_r_peaks(signal: &[f64], rate_hz: f64) -> Vec<usize> {
    debug_assert!(rate_hz >= 100.0, "detector assumes rate >= 100 Hz");
    let n = signal.len();
    let refractory = (REFRACTORY_SECS * rate_hz).round() as usize;
    if n < 2 * refractory {
        return Vec::new();
    }

    let taps = ((rate_hz * 0.155) as usize) | 1;
    let band = convolve_same(signal, &bandpass_kernel(BAND_LOW_HZ, BAND_HIGH_HZ, rate_hz, taps));
    let squared: Vec<f64> = (0..n)
        .map(|i| {
            let d = (band[mirror_index(i as isize + 1, n)] - band[mirror_index(i as isize - 1, n)]) / 2.0;
            d * d
        })
        .collect();
    let win = ((INTEGRATION_SECS * rate_hz).round() as usize).max(1) | 1;
    let integrated = moving_average(&squared, win);

    // Threshold bootstrap from the first two seconds.
    let lead_in = ((2.0 * rate_hz) as usize).min(n);
    let mut spki = integrated[..lead_in].iter().cloned().fold(0.0, f64::max) * 0.5;
    let mut npki = integrated[..lead_in].iter().sum::<f64>() / lead_in as f64 * 0.5;
    if spki <= 0.0 {
        return Vec::new();
    }

    let mut raw_peaks = Vec::new();
    let mut last_accept: Option<usize> = None;
    for i in 1..n - 1 {
        let v = integrated[i];
        if !(v >= integrated[i - 1] && v > integrated[i + 1]) {
            continue;
        }
        let threshold = npki + 0.25 * (spki - npki);
        if v > threshold {
            if last_accept.is_some_and(|p| i - p < refractory) {
                continue;
            }
            raw_peaks.push(i);
            last_accept = Some(i);
            spki = 0.125 * v + 0.875 * spki;
        } else {
            npki = 0.125 * v + 0.875 * npki;
        }
    }

    // Refine onto the squared bandpass signal and re-impose spacing.
    let half = win / 2;
    let mut peaks: Vec<usize> = Vec::with_capacity(raw_peaks.len());
    for p in raw_peaks {
        let lo = p.saturating_sub(half);
        let hi = (p + half + 1).min(n);
        let refined = (lo..hi)
            .max_by(|&a, &b| squared[a].total_cmp(&squared[b]))
            .unwrap_or(p);
        match peaks.last() {
            Some(&prev) if refined <= prev || refined - prev < refractory => {
                if squared[refined] > squared[prev] {
                    *peaks.last_mut().unwrap() = refined;
                }
            }
            _ => peaks.push(refined),
        }
    }
    peaks
}

fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = (window / 2) as isize;
    let mut out = Vec::with_capacity(n);
    let mut acc: f64 = (-half..=half).map(|d| x[mirror_index(d, n)]).sum();
    out.push(acc / window as f64);
    for i in 1..n as isize {
        acc += x[mirror_index(i + half, n)] - x[mirror_index(i - half - 1, n)];
        out.push(acc / window as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_spike_train(centers_secs: &[f64], rate: f64, duration: f64) -> Vec<f64> {
        let n = (duration * rate) as usize;
        let sigma = 0.010; // 10 ms
        (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                centers_secs
                    .iter()
                    .map(|c| (-((t - c) * (t - c)) / (2.0 * sigma * sigma)).exp())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn one_hz_spike_train_detected_within_25_ms() {
        let rate = 200.0;
        let centers: Vec<f64> = (0..10).map(|k| 0.5 + k as f64).collect();
        let x = gaussian_spike_train(&centers, rate, 10.0);
        let peaks = detect_r_peaks(&x, rate);
        assert!(
            (9..=11).contains(&peaks.len()),
            "expected 10 +/- 1 peaks, got {}",
            peaks.len()
        );
        let tolerance = 0.025 * rate; // 25 ms in samples
        for &p in &peaks {
            let nearest = centers
                .iter()
                .map(|c| ((c * rate) - p as f64).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= tolerance, "peak {p} is {nearest} samples off");
        }
    }

    #[test]
    fn flat_signal_yields_nothing() {
        assert!(detect_r_peaks(&vec![0.0; 2000], 200.0).is_empty());
    }

    #[test]
    fn refractory_merges_close_spikes() {
        let rate = 200.0;
        // Two spikes 100 ms apart in the middle of a quiet stretch.
        let x = gaussian_spike_train(&[2.0, 2.1], rate, 4.0);
        let peaks = detect_r_peaks(&x, rate);
        assert_eq!(peaks.len(), 1, "peaks {peaks:?}");
    }

    #[test]
    fn spacing_invariant_holds() {
        let rate = 200.0;
        let centers: Vec<f64> = (0..20).map(|k| 0.4 + 0.47 * k as f64).collect();
        let x = gaussian_spike_train(&centers, rate, 10.0);
        let peaks = detect_r_peaks(&x, rate);
        let refractory = (0.2 * rate) as usize;
        for pair in peaks.windows(2) {
            assert!(pair[1] > pair[0]);
            assert!(pair[1] - pair[0] >= refractory, "gap {:?}", pair);
        }
    }

    #[test]
    fn short_input_is_empty_not_panicking() {
        assert!(detect_r_peaks(&[1.0, 2.0, 1.0], 200.0).is_empty());
        assert!(detect_r_peaks(&[], 200.0).is_empty());
    }
}
