//! Baseline-wander removal by cascaded median filtering.

use super::{mirror_index, DspError};
use crate::config::{FilterKind, FilterSpec};

/// Sliding median with an odd, centered window and mirrored edges.
///
/// The window is kept as a sorted vector; each step removes the
/// outgoing sample and inserts the incoming one by binary search.
fn sliding_median(signal: &[f64], window: usize) -> Vec<f64> {
    debug_assert!(window % 2 == 1);
    let n = signal.len();
    if window <= 1 || n == 1 {
        return signal.to_vec();
    }
    let half = (window / 2) as isize;
    let at = |i: isize| signal[mirror_index(i, n)];

    let mut sorted: Vec<f64> = (-half..=half).map(at).collect();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(n);
    out.push(sorted[window / 2]);
    for i in 1..n as isize {
        let outgoing = at(i - half - 1);
        let incoming = at(i + half);
        let pos = sorted
            .binary_search_by(|v| v.total_cmp(&outgoing))
            .expect("outgoing value present");
        sorted.remove(pos);
        let pos = match sorted.binary_search_by(|v| v.total_cmp(&incoming)) {
            Ok(p) | Err(p) => p,
        };
        sorted.insert(pos, incoming);
        out.push(sorted[window / 2]);
    }
    out
}

fn window_samples(ms: f64, rate_hz: f64) -> usize {
    let w = (ms / 1000.0 * rate_hz).round() as usize;
    // Centered windows must be odd.
    (w | 1).max(1)
}

/// Estimates baseline wander with two cascaded median filters (short
/// window removes QRS/P/T structure, long window smooths what is
/// left) and subtracts it from the signal.
pub fn remove_baseline(signal: &[f64], rate_hz: f64, spec: &FilterSpec) -> Result<Vec<f64>, DspError> {
    if signal.is_empty() {
        return Err(DspError::EmptyInput);
    }
    if spec.kind != FilterKind::MedianBaseline {
        return Err(DspError::InvalidSpec(format!(
            "expected a median_baseline spec, got {:?}",
            spec.kind
        )));
    }
    spec.validate(rate_hz)
        .map_err(|e| DspError::InvalidSpec(e.to_string()))?;
    let (short_ms, long_ms) = spec.window_ms;
    let stage1 = sliding_median(signal, window_samples(short_ms, rate_hz));
    let baseline = sliding_median(&stage1, window_samples(long_ms, rate_hz));
    Ok(signal
        .iter()
        .zip(&baseline)
        .map(|(x, b)| x - b)
        .collect())
}
