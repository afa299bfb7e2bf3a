//! Signal conditioning for the 200 Hz pipeline.
//!
//! All operations are pure functions over `&[f64]` slices and may be
//! called concurrently per lead or window. Edge handling is mirror
//! reflection throughout, so every stage preserves input length.

mod baseline;
mod fir;
mod normalize;
mod qrs;
mod resample;

pub use baseline::remove_baseline;
pub use fir::{bandpass_kernel, convolve_same, lowpass, lowpass_kernel};
pub use normalize::{quantile, robust_normalize, DEFAULT_CLAMP};
pub use qrs::detect_r_peaks;
pub use resample::resample;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DspError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),
    #[error("window of {len} samples is shorter than the required {min}")]
    WindowTooShort { len: usize, min: usize },
}

/// Maps an out-of-range index into `0..len` by mirror reflection
/// (without repeating the edge sample).
pub(crate) fn mirror_index(i: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut k = i.rem_euclid(period);
    if k >= len as isize {
        k = period - k;
    }
    k as usize
}
