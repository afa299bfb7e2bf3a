//! Layer kernels: forward and backward passes.
//!
//! Storage is `S: Scalar`; every reduction accumulates in f64 with a
//! fixed summation order, so results are reproducible bit-for-bit
//! regardless of thread count (parallelism only ever splits across
//! independent output regions).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::scalar::Scalar;
use super::tensor::Tensor3;
use super::NnError;

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// Weights of one convolution: `weight[oc][ic][j]` flattened
/// row-major, plus one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilter<S> {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kernel: usize,
    pub weight: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> ConvFilter<S> {
    pub fn zeros(out_ch: usize, in_ch: usize, kernel: usize) -> Self {
        Self {
            out_ch,
            in_ch,
            kernel,
            weight: vec![S::ZERO; out_ch * in_ch * kernel],
            bias: vec![S::ZERO; out_ch],
        }
    }

    #[inline]
    fn w(&self, oc: usize, ic: usize, j: usize) -> S {
        self.weight[(oc * self.in_ch + ic) * self.kernel + j]
    }
}

/// "Same" cross-correlation padding: output length `ceil(len/stride)`,
/// surplus padding on the right.
fn same_padding(len: usize, kernel: usize, stride: usize) -> (usize, usize) {
    let out_len = len.div_ceil(stride);
    let total = ((out_len - 1) * stride + kernel).saturating_sub(len);
    (out_len, total / 2)
}

pub fn conv1d_forward<S: Scalar>(
    x: &Tensor3<S>,
    filter: &ConvFilter<S>,
    stride: usize,
) -> Result<Tensor3<S>, NnError> {
    if x.channels != filter.in_ch {
        return Err(NnError::ShapeMismatch(format!(
            "conv expects {} input channels, got {}",
            filter.in_ch, x.channels
        )));
    }
    assert!(stride >= 1 && filter.kernel >= 1);
    let (out_len, pad_left) = same_padding(x.len, filter.kernel, stride);
    let mut out = Tensor3::zeros(x.batch, filter.out_ch, out_len);
    let per_batch = filter.out_ch * out_len;
    out.data
        .par_chunks_mut(per_batch)
        .enumerate()
        .for_each(|(b, chunk)| {
            for oc in 0..filter.out_ch {
                let bias = filter.bias[oc].to_f64();
                for i in 0..out_len {
                    let base = (i * stride) as isize - pad_left as isize;
                    let j_lo = (-base).max(0) as usize;
                    let j_hi = filter.kernel.min((x.len as isize - base).max(0) as usize);
                    let mut acc = bias;
                    for ic in 0..filter.in_ch {
                        let row = x.row(b, ic);
                        for j in j_lo..j_hi {
                            acc += filter.w(oc, ic, j).to_f64()
                                * row[(base + j as isize) as usize].to_f64();
                        }
                    }
                    chunk[oc * out_len + i] = S::from_f64(acc);
                }
            }
        });
    Ok(out)
}

/// Gradients of the convolution; returns (d_input, d_weight, d_bias).
pub fn conv1d_backward<S: Scalar>(
    x: &Tensor3<S>,
    filter: &ConvFilter<S>,
    stride: usize,
    grad_out: &Tensor3<S>,
) -> (Tensor3<S>, Vec<S>, Vec<S>) {
    let (out_len, pad_left) = same_padding(x.len, filter.kernel, stride);
    debug_assert_eq!(grad_out.shape(), (x.batch, filter.out_ch, out_len));

    // d_bias and d_weight: parallel per output channel, sequential
    // over (batch, position) inside.
    let mut grad_bias = vec![S::ZERO; filter.out_ch];
    let mut grad_weight = vec![S::ZERO; filter.out_ch * filter.in_ch * filter.kernel];
    let w_stride = filter.in_ch * filter.kernel;
    grad_bias
        .par_iter_mut()
        .zip(grad_weight.par_chunks_mut(w_stride))
        .enumerate()
        .for_each(|(oc, (gb, gw))| {
            let mut bias_acc = 0.0f64;
            let mut w_acc = vec![0.0f64; w_stride];
            for b in 0..x.batch {
                let g_row = grad_out.row(b, oc);
                for (i, &g) in g_row.iter().enumerate() {
                    let g = g.to_f64();
                    bias_acc += g;
                    let base = (i * stride) as isize - pad_left as isize;
                    let j_lo = (-base).max(0) as usize;
                    let j_hi = filter.kernel.min((x.len as isize - base).max(0) as usize);
                    for ic in 0..filter.in_ch {
                        let row = x.row(b, ic);
                        let acc = &mut w_acc[ic * filter.kernel..(ic + 1) * filter.kernel];
                        for j in j_lo..j_hi {
                            acc[j] += g * row[(base + j as isize) as usize].to_f64();
                        }
                    }
                }
            }
            *gb = S::from_f64(bias_acc);
            for (dst, src) in gw.iter_mut().zip(w_acc) {
                *dst = S::from_f64(src);
            }
        });

    // d_input: parallel per batch element.
    let mut grad_x = Tensor3::zeros(x.batch, x.channels, x.len);
    let per_batch = x.channels * x.len;
    grad_x
        .data
        .par_chunks_mut(per_batch)
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut acc = vec![0.0f64; per_batch];
            for oc in 0..filter.out_ch {
                let g_row = grad_out.row(b, oc);
                for (i, &g) in g_row.iter().enumerate() {
                    let g = g.to_f64();
                    if g == 0.0 {
                        continue;
                    }
                    let base = (i * stride) as isize - pad_left as isize;
                    let j_lo = (-base).max(0) as usize;
                    let j_hi = filter.kernel.min((x.len as isize - base).max(0) as usize);
                    for ic in 0..filter.in_ch {
                        let dst = &mut acc[ic * x.len..(ic + 1) * x.len];
                        for j in j_lo..j_hi {
                            dst[(base + j as isize) as usize] += filter.w(oc, ic, j).to_f64() * g;
                        }
                    }
                }
            }
            for (dst, src) in chunk.iter_mut().zip(acc) {
                *dst = S::from_f64(src);
            }
        });

    (grad_x, grad_weight, grad_bias)
}

/// Per-channel scale/shift parameters plus running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BnParams<S> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
}

impl<S: Scalar> BnParams<S> {
    pub fn identity(channels: usize) -> Self {
        Self {
            gamma: vec![S::ONE; channels],
            beta: vec![S::ZERO; channels],
            running_mean: vec![S::ZERO; channels],
            running_var: vec![S::ONE; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// What the backward pass needs from a train-mode forward.
#[derive(Debug, Clone)]
pub struct BnCache<S> {
    pub xhat: Tensor3<S>,
    pub inv_std: Vec<f64>,
}

/// Train-mode batchnorm: normalizes by batch statistics (biased
/// variance over batch x length), updates running stats in place.
pub fn batchnorm_train<S: Scalar>(
    x: &Tensor3<S>,
    bn: &mut BnParams<S>,
) -> Result<(Tensor3<S>, BnCache<S>), NnError> {
    debug_assert_eq!(x.channels, bn.channels());
    let n = x.batch * x.len;
    if n < 2 {
        return Err(NnError::BatchTooSmall { elements: n });
    }
    let mut out = Tensor3::zeros(x.batch, x.channels, x.len);
    let mut xhat = Tensor3::zeros(x.batch, x.channels, x.len);
    let mut inv_stds = vec![0.0f64; x.channels];
    for c in 0..x.channels {
        let mut sum = 0.0f64;
        for b in 0..x.batch {
            for &v in x.row(b, c) {
                sum += v.to_f64();
            }
        }
        let mean = sum / n as f64;
        let mut var_sum = 0.0f64;
        for b in 0..x.batch {
            for &v in x.row(b, c) {
                let d = v.to_f64() - mean;
                var_sum += d * d;
            }
        }
        let var = var_sum / n as f64;
        let inv_std = 1.0 / (var + BN_EPSILON).sqrt();
        inv_stds[c] = inv_std;
        let gamma = bn.gamma[c].to_f64();
        let beta = bn.beta[c].to_f64();
        for b in 0..x.batch {
            for i in 0..x.len {
                let h = (x.at(b, c, i).to_f64() - mean) * inv_std;
                *xhat.at_mut(b, c, i) = S::from_f64(h);
                *out.at_mut(b, c, i) = S::from_f64(gamma * h + beta);
            }
        }
        bn.running_mean[c] =
            S::from_f64(BN_MOMENTUM * bn.running_mean[c].to_f64() + (1.0 - BN_MOMENTUM) * mean);
        bn.running_var[c] =
            S::from_f64(BN_MOMENTUM * bn.running_var[c].to_f64() + (1.0 - BN_MOMENTUM) * var);
    }
    Ok((out, BnCache { xhat, inv_std: inv_stds }))
}

/// Eval-mode batchnorm: running statistics only, no state change.
pub fn batchnorm_eval<S: Scalar>(x: &Tensor3<S>, bn: &BnParams<S>) -> Tensor3<S> {
    debug_assert_eq!(x.channels, bn.channels());
    let mut out = Tensor3::zeros(x.batch, x.channels, x.len);
    for c in 0..x.channels {
        let inv_std = 1.0 / (bn.running_var[c].to_f64() + BN_EPSILON).sqrt();
        let mean = bn.running_mean[c].to_f64();
        let gamma = bn.gamma[c].to_f64();
        let beta = bn.beta[c].to_f64();
        for b in 0..x.batch {
            for i in 0..x.len {
                let h = (x.at(b, c, i).to_f64() - mean) * inv_std;
                *out.at_mut(b, c, i) = S::from_f64(gamma * h + beta);
            }
        }
    }
    out
}

/// Returns (d_input, d_gamma, d_beta) for a train-mode forward.
pub fn batchnorm_backward<S: Scalar>(
    bn: &BnParams<S>,
    cache: &BnCache<S>,
    grad_out: &Tensor3<S>,
) -> (Tensor3<S>, Vec<S>, Vec<S>) {
    let xhat = &cache.xhat;
    let n = (xhat.batch * xhat.len) as f64;
    let mut grad_x = Tensor3::zeros(xhat.batch, xhat.channels, xhat.len);
    let mut grad_gamma = vec![S::ZERO; xhat.channels];
    let mut grad_beta = vec![S::ZERO; xhat.channels];
    for c in 0..xhat.channels {
        let mut sum_g = 0.0f64;
        let mut sum_gh = 0.0f64;
        for b in 0..xhat.batch {
            for i in 0..xhat.len {
                let g = grad_out.at(b, c, i).to_f64();
                sum_g += g;
                sum_gh += g * xhat.at(b, c, i).to_f64();
            }
        }
        grad_gamma[c] = S::from_f64(sum_gh);
        grad_beta[c] = S::from_f64(sum_g);
        let scale = bn.gamma[c].to_f64() * cache.inv_std[c];
        for b in 0..xhat.batch {
            for i in 0..xhat.len {
                let g = grad_out.at(b, c, i).to_f64();
                let h = xhat.at(b, c, i).to_f64();
                *grad_x.at_mut(b, c, i) =
                    S::from_f64(scale * (g - sum_g / n - h * sum_gh / n));
            }
        }
    }
    (grad_x, grad_gamma, grad_beta)
}

pub fn relu_forward<S: Scalar>(x: &Tensor3<S>) -> Tensor3<S> {
    let mut out = x.clone();
    for v in &mut out.data {
        *v = v.max_scalar(S::ZERO);
    }
    out
}

/// Backward through ReLU given its *output* (y > 0 iff x > 0).
pub fn relu_backward<S: Scalar>(y: &Tensor3<S>, grad_out: &Tensor3<S>) -> Tensor3<S> {
    let mut grad = grad_out.clone();
    for (g, &v) in grad.data.iter_mut().zip(&y.data) {
        if !(v > S::ZERO) {
            *g = S::ZERO;
        }
    }
    grad
}

/// Inverted dropout; the kept mask is fully determined by `seed`, so
/// a forward can be replayed exactly. Rate 0 skips masking entirely.
pub fn dropout_forward<S: Scalar>(x: &Tensor3<S>, rate: f64, seed: u64) -> (Tensor3<S>, Vec<bool>) {
    assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 {
        return (x.clone(), Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (1.0 - rate);
    let mut out = x.clone();
    let mask: Vec<bool> = (0..x.data.len()).map(|_| rng.random::<f64>() >= rate).collect();
    for (v, &keep) in out.data.iter_mut().zip(&mask) {
        *v = if keep { S::from_f64(v.to_f64() * scale) } else { S::ZERO };
    }
    (out, mask)
}

pub fn dropout_backward<S: Scalar>(mask: &[bool], rate: f64, grad_out: &Tensor3<S>) -> Tensor3<S> {
    if rate == 0.0 {
        return grad_out.clone();
    }
    let scale = 1.0 / (1.0 - rate);
    let mut grad = grad_out.clone();
    for (g, &keep) in grad.data.iter_mut().zip(mask) {
        *g = if keep { S::from_f64(g.to_f64() * scale) } else { S::ZERO };
    }
    grad
}

/// Non-overlapping max pooling; a trailing partial window is pooled
/// too. Returns the output and flat argmax indices for backward.
pub fn maxpool1d_forward<S: Scalar>(x: &Tensor3<S>, factor: usize) -> (Tensor3<S>, Vec<usize>) {
    assert!(factor >= 1);
    let out_len = x.len.div_ceil(factor);
    let mut out = Tensor3::zeros(x.batch, x.channels, out_len);
    let mut argmax = vec![0usize; x.batch * x.channels * out_len];
    for b in 0..x.batch {
        for c in 0..x.channels {
            let row = x.row(b, c);
            for i in 0..out_len {
                let lo = i * factor;
                let hi = (lo + factor).min(x.len);
                let mut best = lo;
                for j in lo + 1..hi {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                *out.at_mut(b, c, i) = row[best];
                argmax[out.index(b, c, i)] = best;
            }
        }
    }
    (out, argmax)
}

pub fn maxpool1d_backward<S: Scalar>(
    input_shape: (usize, usize, usize),
    argmax: &[usize],
    grad_out: &Tensor3<S>,
) -> Tensor3<S> {
    let (batch, channels, len) = input_shape;
    let mut grad = Tensor3::zeros(batch, channels, len);
    for b in 0..batch {
        for c in 0..channels {
            for i in 0..grad_out.len {
                let src = argmax[grad_out.index(b, c, i)];
                *grad.at_mut(b, c, src) += grad_out.at(b, c, i);
            }
        }
    }
    grad
}

/// Per-timestep dense layer: `weight[k][c]`, one output channel per
/// class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams<S> {
    pub out_features: usize,
    pub in_features: usize,
    pub weight: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> LinearParams<S> {
    pub fn zeros(out_features: usize, in_features: usize) -> Self {
        Self {
            out_features,
            in_features,
            weight: vec![S::ZERO; out_features * in_features],
            bias: vec![S::ZERO; out_features],
        }
    }
}

pub fn linear_forward<S: Scalar>(x: &Tensor3<S>, p: &LinearParams<S>) -> Result<Tensor3<S>, NnError> {
    if x.channels != p.in_features {
        return Err(NnError::ShapeMismatch(format!(
            "linear expects {} channels, got {}",
            p.in_features, x.channels
        )));
    }
    let mut out = Tensor3::zeros(x.batch, p.out_features, x.len);
    for b in 0..x.batch {
        for k in 0..p.out_features {
            let bias = p.bias[k].to_f64();
            for t in 0..x.len {
                let mut acc = bias;
                for c in 0..p.in_features {
                    acc += p.weight[k * p.in_features + c].to_f64() * x.at(b, c, t).to_f64();
                }
                *out.at_mut(b, k, t) = S::from_f64(acc);
            }
        }
    }
    Ok(out)
}

pub fn linear_backward<S: Scalar>(
    x: &Tensor3<S>,
    p: &LinearParams<S>,
    grad_out: &Tensor3<S>,
) -> (Tensor3<S>, Vec<S>, Vec<S>) {
    let mut grad_x = Tensor3::zeros(x.batch, x.channels, x.len);
    let mut grad_w = vec![0.0f64; p.weight.len()];
    let mut grad_b = vec![0.0f64; p.bias.len()];
    for b in 0..x.batch {
        for k in 0..p.out_features {
            for t in 0..x.len {
                let g = grad_out.at(b, k, t).to_f64();
                grad_b[k] += g;
                for c in 0..p.in_features {
                    grad_w[k * p.in_features + c] += g * x.at(b, c, t).to_f64();
                    *grad_x.at_mut(b, c, t) +=
                        S::from_f64(p.weight[k * p.in_features + c].to_f64() * g);
                }
            }
        }
    }
    (
        grad_x,
        grad_w.into_iter().map(S::from_f64).collect(),
        grad_b.into_iter().map(S::from_f64).collect(),
    )
}

/// Softmax across the channel (class) dimension, stably in f64.
pub fn softmax_channels<S: Scalar>(logits: &Tensor3<S>) -> Tensor3<S> {
    let mut out = Tensor3::zeros(logits.batch, logits.channels, logits.len);
    for b in 0..logits.batch {
        for t in 0..logits.len {
            let mut max = f64::NEG_INFINITY;
            for c in 0..logits.channels {
                max = max.max(logits.at(b, c, t).to_f64());
            }
            let mut denom = 0.0f64;
            for c in 0..logits.channels {
                denom += (logits.at(b, c, t).to_f64() - max).exp();
            }
            for c in 0..logits.channels {
                let p = (logits.at(b, c, t).to_f64() - max).exp() / denom;
                *out.at_mut(b, c, t) = S::from_f64(p);
            }
        }
    }
    out
}
