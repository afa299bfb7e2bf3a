//! Robust per-window normalization.

use super::DspError;

/// Clamp bound applied after scaling, in IQR units.
pub const DEFAULT_CLAMP: f64 = 20.0;

const IQR_EPSILON: f64 = 1e-6;

/// Quantile of a sorted slice by linear interpolation between order
/// statistics: rank `h = (n-1)p`, value `v[⌊h⌋] + frac(h)·(v[⌊h⌋+1] −
/// v[⌊h⌋])`. This one definition backs every quartile in the crate.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Centers on the median, scales by the interquartile range (floored
/// at 1e-6 to guard flat windows), and clamps to ±`clamp`.
pub fn robust_normalize(window: &[f64], clamp: f64) -> Result<Vec<f64>, DspError> {
    if window.len() < 4 {
        return Err(DspError::WindowTooShort { len: window.len(), min: 4 });
    }
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile(&sorted, 0.5);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let scale = iqr.max(IQR_EPSILON);
    Ok(window
        .iter()
        .map(|x| ((x - median) / scale).clamp(-clamp, clamp))
        .collect())
}
