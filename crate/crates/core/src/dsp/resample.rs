//! Polyphase rational-ratio resampling.

use super::{mirror_index, DspError};

/// Smallest rational approximation of `x` by continued fractions with
/// denominator bounded by `max_den`.
fn to_rational(x: f64, max_den: u64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut frac = x;
    loop {
        let a = frac.floor();
        let p2 = (a as u64).saturating_mul(p1).saturating_add(p0);
        let q2 = (a as u64).saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let rem = frac - a;
        if rem.abs() < 1e-12 || (p1 as f64 / q1 as f64 - x).abs() < 1e-12 {
            break;
        }
        frac = 1.0 / rem;
    }
    (p1, q1)
}

/// Resamples `signal` from `from_rate` to `to_rate` by polyphase
/// upsample-filter-downsample with a Hamming windowed-sinc kernel.
///
/// Output length is `round(len * to_rate / from_rate)`. Edges are
/// mirror-reflected. Each polyphase branch is normalized to unit DC
/// gain, so constants pass through exactly.
pub fn resample(signal: &[f64], from_rate: f64, to_rate: f64) -> Result<Vec<f64>, DspError> {
    if signal.is_empty() {
        return Err(DspError::EmptyInput);
    }
    if !(from_rate > 0.0 && to_rate > 0.0) {
        return Err(DspError::InvalidSpec(format!(
            "rates must be positive, got {from_rate} -> {to_rate}"
        )));
    }
    let (l, m) = to_rational(to_rate / from_rate, 4096);
    if l == 0 {
        return Err(DspError::InvalidSpec(format!(
            "ratio {to_rate}/{from_rate} too extreme to resample"
        )));
    }
    let n_out = (signal.len() as f64 * to_rate / from_rate).round() as usize;
    if l == m {
        return Ok(signal[..n_out.min(signal.len())].to_vec());
    }
    let (l, m) = (l as usize, m as usize);

    // Anti-aliasing lowpass at the upsampled rate: cutoff at the
    // narrower of the input and output Nyquist bands, 10 band-edge
    // zero-crossings per side, gain L folded into the window.
    let widest = l.max(m);
    let half = 10 * widest;
    let fc = 0.5 / widest as f64;
    let taps = 2 * half + 1;
    let mut kernel: Vec<f64> = (0..taps)
        .map(|i| {
            let n = i as f64 - half as f64;
            let m_ = (taps - 1) as f64;
            let window = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / m_).cos();
            let x = 2.0 * fc * n;
            let sinc = if x == 0.0 {
                1.0
            } else {
                (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
            };
            2.0 * fc * sinc * window
        })
        .collect();
    // Exact DC per output phase: taps used by one output all share a
    // residue class mod L; normalize each class to sum 1.
    let mut class_sum = vec![0.0f64; l];
    for (i, &k) in kernel.iter().enumerate() {
        class_sum[i % l] += k;
    }
    for (i, k) in kernel.iter_mut().enumerate() {
        *k /= class_sum[i % l];
    }

    let n = signal.len();
    let mut out = Vec::with_capacity(n_out);
    for j in 0..n_out {
        // Output j sits at upsampled-grid position j*M; input sample k
        // contributes through kernel tap j*M - k*L.
        let t = (j * m) as isize;
        let half = half as isize;
        let l_i = l as isize;
        let k_lo = (t - half).div_euclid(l_i) + i64::from((t - half).rem_euclid(l_i) != 0) as isize;
        let k_hi = (t + half).div_euclid(l_i);
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            let tap = (t - k * l_i + half) as usize;
            acc += kernel[tap] * signal[mirror_index(k, n)];
        }
        out.push(acc);
    }
    Ok(out)
}
