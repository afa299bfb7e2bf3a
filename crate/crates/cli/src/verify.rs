//! `stdetect verify` — self-contained numeric verification, runnable
//! with no data on disk.
//!
//! Four checks, one `PASS`/`FAIL` line each:
//!
//! 1. gradient fidelity of the full training graph against central
//!    differences on an f64 shadow copy,
//! 2. the convolution kernel against a direct reimplementation kept in
//!    this crate (not the one the test suite uses),
//! 3. ROC-AUC against brute-force pair counting, required to agree
//!    exactly,
//! 4. codec round-trips for the 12-bit signal packing and the
//!    annotation stream.
//!
//! Any failure exits 1. A hidden `--inject-fault` flag corrupts one
//! analytic gradient so the harness itself can be shown to fail.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use stdetect_core::eval::roc_auc;
use stdetect_core::nn::ops::{conv1d_forward, ConvFilter};
use stdetect_core::nn::{check_config, gradient_check, gradient_check_faulted, Tensor3};
use stdetect_core::wfdb::{decode_212, encode_212, read_annotations, write_annotations};
use stdetect_core::AnnotationEvent;

use crate::error::CliError;

const GRAD_TOLERANCE: f64 = 1e-4;
const CONV_TOLERANCE: f64 = 1e-5;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
    secs: f64,
}

fn run_check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), CliError>) -> Result<Check, CliError> {
    let start = Instant::now();
    let (passed, detail) = f()?;
    Ok(Check { name, passed, detail, secs: start.elapsed().as_secs_f64() })
}

fn gradient(seed: u64, inject_fault: bool) -> Result<(bool, String), CliError> {
    let config = check_config();
    let report = if inject_fault {
        gradient_check_faulted(&config, seed, GRAD_TOLERANCE)
    } else {
        gradient_check(&config, seed, GRAD_TOLERANCE)
    }
    .map_err(|e| CliError::Other(format!("gradient check did not run: {e}")))?;
    let detail = format!(
        "max rel err {:.3e} over {} parameter groups (tolerance {GRAD_TOLERANCE:.0e})",
        report.max_rel_err(),
        report.groups.len()
    );
    Ok((report.passed(), detail))
}

/// Direct cross-correlation with explicit zero padding; four plain
/// loops, padding recomputed from the definition.
fn direct_conv(x: &Tensor3<f32>, filter: &ConvFilter<f32>, stride: usize) -> Tensor3<f32> {
    let out_len = x.len.div_ceil(stride);
    let total_pad = ((out_len - 1) * stride + filter.kernel).saturating_sub(x.len);
    let pad_left = total_pad / 2;
    let mut out = Tensor3::zeros(x.batch, filter.out_ch, out_len);
    for b in 0..x.batch {
        for oc in 0..filter.out_ch {
            for i in 0..out_len {
                let mut acc = f64::from(filter.bias[oc]);
                for ic in 0..filter.in_ch {
                    for j in 0..filter.kernel {
                        let src = (i * stride + j) as i64 - pad_left as i64;
                        if src >= 0 && (src as usize) < x.len {
                            let w = filter.weight[(oc * filter.in_ch + ic) * filter.kernel + j];
                            acc += f64::from(w) * f64::from(x.at(b, ic, src as usize));
                        }
                    }
                }
                *out.at_mut(b, oc, i) = acc as f32;
            }
        }
    }
    out
}

fn conv_oracle(seed: u64) -> Result<(bool, String), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f_6e76);
    let mut max_err = 0f64;
    for trial in 0..100 {
        let batch = rng.random_range(1..=4);
        let in_ch = rng.random_range(1..=6);
        let out_ch = rng.random_range(1..=6);
        let kernel = rng.random_range(1..=9);
        let len = rng.random_range(1..=48);
        let stride = rng.random_range(1..=3);
        let x = Tensor3::from_vec(
            batch,
            in_ch,
            len,
            (0..batch * in_ch * len).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect(),
        );
        let mut filter = ConvFilter::zeros(out_ch, in_ch, kernel);
        for w in &mut filter.weight {
            *w = rng.random::<f32>() * 2.0 - 1.0;
        }
        for b in &mut filter.bias {
            *b = rng.random::<f32>() * 2.0 - 1.0;
        }
        let got = conv1d_forward(&x, &filter, stride)
            .map_err(|e| CliError::Other(format!("conv trial {trial}: {e}")))?;
        let want = direct_conv(&x, &filter, stride);
        for (a, b) in got.data.iter().zip(want.data.iter()) {
            max_err = max_err.max((f64::from(*a) - f64::from(*b)).abs());
        }
    }
    let detail =
        format!("100 random shapes, max abs err {max_err:.3e} (tolerance {CONV_TOLERANCE:.0e})");
    Ok((max_err <= CONV_TOLERANCE, detail))
}

/// O(P*N) pair counting: wins + half-ties over all positive/negative
/// pairs.
fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0u64;
    let mut ties = 0u64;
    let mut pairs = 0u64;
    for (sp, &lp) in scores.iter().zip(labels) {
        if !lp {
            continue;
        }
        for (sn, &ln) in scores.iter().zip(labels) {
            if ln {
                continue;
            }
            pairs += 1;
            if sp > sn {
                wins += 1;
            } else if sp == sn {
                ties += 1;
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / pairs as f64
}

fn auc_oracle(seed: u64) -> Result<(bool, String), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6175_6300);
    for trial in 0..1000 {
        // Scores from a coarse grid so ties are common.
        let n = rng.random_range(2..=60);
        let mut scores: Vec<f64> = Vec::with_capacity(n);
        let mut labels: Vec<bool> = Vec::with_capacity(n);
        for _ in 0..n {
            scores.push(f64::from(rng.random_range(0u8..8)) / 4.0);
            labels.push(rng.random_bool(0.5));
        }
        // Guarantee both classes.
        labels[0] = true;
        labels[n - 1] = false;
        let fast = roc_auc(&scores, &labels)
            .map_err(|e| CliError::Other(format!("auc trial {trial}: {e}")))?;
        let slow = pair_count_auc(&scores, &labels);
        if fast != slow {
            let detail = format!(
                "trial {trial}: midrank {fast} != pair count {slow} on {n} scores"
            );
            return Ok((false, detail));
        }
    }
    Ok((true, "1000 random instances, midrank == pair counting exactly".into()))
}

fn codec_round_trips(seed: u64) -> Result<(bool, String), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3231_3200);
    for trial in 0..1000 {
        let n = rng.random_range(0..=64);
        let samples: Vec<i16> = (0..n).map(|_| rng.random_range(-2048i16..=2047)).collect();
        let decoded = decode_212(&encode_212(&samples))
            .map_err(|e| CliError::Other(format!("decode trial {trial}: {e}")))?;
        if decoded != samples {
            return Ok((false, format!("signal buffer {trial} changed across the codec")));
        }
    }
    for trial in 0..200 {
        let n = rng.random_range(0..=40);
        let mut sample = 0u64;
        let events: Vec<AnnotationEvent> = (0..n)
            .map(|_| {
                // Deltas above 1023 force SKIP words.
                sample += rng.random_range(1..5000);
                let aux = if rng.random_bool(0.5) {
                    let len = rng.random_range(0..10);
                    Some((0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect())
                } else {
                    None
                };
                AnnotationEvent {
                    sample_index: sample,
                    code: rng.random_range(1..=49),
                    subtype: rng.random_range(-4..=4),
                    channel: rng.random_range(0..4),
                    num_field: rng.random_range(-2..=2),
                    aux,
                }
            })
            .collect();
        let decoded = read_annotations(&write_annotations(&events))
            .map_err(|e| CliError::Other(format!("annotation trial {trial}: {e}")))?;
        if decoded != events {
            return Ok((false, format!("annotation stream {trial} changed across the codec")));
        }
    }
    Ok((true, "1000 signal buffers + 200 annotation streams, bitwise".into()))
}

pub fn run(seed: u64, inject_fault: bool) -> Result<(), CliError> {
    let checks = [
        run_check("gradient-check", || gradient(seed, inject_fault))?,
        run_check("conv-oracle", || conv_oracle(seed))?,
        run_check("roc-auc-oracle", || auc_oracle(seed))?,
        run_check("codec-round-trip", || codec_round_trips(seed))?,
    ];
    let mut failed = 0usize;
    for check in &checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {:<16} {}  [{:.2} s]", check.name, check.detail, check.secs);
        failed += usize::from(!check.passed);
    }
    if failed > 0 {
        return Err(CliError::Other(format!(
            "verify: {failed}/{} checks failed",
            checks.len()
        )));
    }
    println!("verify: {}/{} checks passed", checks.len(), checks.len());
    Ok(())
}
