//! Window extraction and episode-overlap labeling.

use super::DatasetError;
use crate::wfdb::StEpisode;

/// A positioned slice of a preprocessed lead, not yet labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct RawWindow {
    pub start_sample: u64,
    pub samples: Vec<f64>,
}

/// Outcome of labeling one window position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelOutcome {
    Normal,
    Ischemic,
    /// Boundary window with some, but too little, episode overlap;
    /// dropped from the dataset.
    Excluded,
}

/// Cuts `signal` into windows at offsets 0, stride, 2*stride, ...;
/// the trailing partial window is discarded.
pub fn window_record(
    signal: &[f64],
    window_len: usize,
    stride: usize,
) -> Result<Vec<RawWindow>, DatasetError> {
    assert!(window_len > 0 && stride > 0);
    if signal.len() < window_len {
        return Err(DatasetError::SignalShorterThanWindow {
            len: signal.len(),
            window: window_len,
        });
    }
    let mut out = Vec::with_capacity((signal.len() - window_len) / stride + 1);
    let mut start = 0usize;
    while start + window_len <= signal.len() {
        out.push(RawWindow {
            start_sample: start as u64,
            samples: signal[start..start + window_len].to_vec(),
        });
        start += stride;
    }
    Ok(out)
}

/// Rescales an episode's sample indices between rates (250 Hz
/// annotations onto the 200 Hz signal), rounding halves to even.
pub fn rescale_episode(episode: &StEpisode, from_rate: f64, to_rate: f64) -> StEpisode {
    let scale = to_rate / from_rate;
    let map = |s: u64| (s as f64 * scale).round_ties_even() as u64;
    StEpisode {
        start_sample: map(episode.start_sample),
        extremum_sample: map(episode.extremum_sample),
        end_sample: map(episode.end_sample),
        ..episode.clone()
    }
}

/// Labels a window by its overlap fraction with the union of episode
/// intervals: at least `ischemic_min` of the window inside episodes is
/// ischemic, zero overlap is normal, anything between is excluded.
///
/// Episodes must already be on the window's sample scale (see
/// [`rescale_episode`]); callers filter them to the window's lead.
pub fn label_window(
    start: u64,
    window_len: usize,
    episodes: &[StEpisode],
    ischemic_min: f64,
) -> LabelOutcome {
    let end = start + window_len as u64;
    let mut clipped: Vec<(u64, u64)> = episodes
        .iter()
        .map(|ep| (ep.start_sample.max(start), ep.end_sample.min(end)))
        .filter(|(a, b)| a < b)
        .collect();
    clipped.sort_unstable();
    let mut overlap = 0u64;
    let mut cursor = start;
    for (a, b) in clipped {
        let a = a.max(cursor);
        if b > a {
            overlap += b - a;
            cursor = b;
        }
    }
    if overlap == 0 {
        return LabelOutcome::Normal;
    }
    let fraction = overlap as f64 / window_len as f64;
    if fraction >= ischemic_min {
        LabelOutcome::Ischemic
    } else {
        LabelOutcome::Excluded
    }
}
