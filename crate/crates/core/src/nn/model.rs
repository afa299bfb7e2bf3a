//! Residual 1-D convolutional classifier.
//!
//! Layout: a stem convolution, then `n_residual_blocks` pre-activation
//! blocks (BN -> ReLU -> dropout -> conv, repeated `convs_per_block`
//! times), then BN -> ReLU -> per-timestep linear -> softmax. Every
//! `subsample_every`-th block halves the time axis; the channel count
//! grows by `base_filters` every `filter_increment_every` blocks. The
//! shortcut path max-pools to match the stride and zero-pads new
//! channels, so blocks stay additive end to end.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::loss::cross_entropy_grad_logits;
use super::ops::{
    batchnorm_backward, batchnorm_eval, batchnorm_train, conv1d_backward, conv1d_forward,
    dropout_backward, dropout_forward, linear_backward, linear_forward, maxpool1d_backward,
    maxpool1d_forward, relu_backward, relu_forward, softmax_channels, BnCache, BnParams,
    ConvFilter, LinearParams,
};
use super::scalar::Scalar;
use super::tensor::Tensor3;
use super::NnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n_residual_blocks: usize,
    pub convs_per_block: usize,
    pub kernel_len: usize,
    pub base_filters: usize,
    /// Channel count grows by `base_filters` once per this many blocks.
    pub filter_increment_every: usize,
    /// Every `subsample_every`-th block strides by 2.
    pub subsample_every: usize,
    pub dropout_rate: f64,
    pub n_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_residual_blocks: 16,
            convs_per_block: 2,
            kernel_len: 16,
            base_filters: 64,
            filter_increment_every: 4,
            subsample_every: 2,
            dropout_rate: 0.2,
            n_classes: 2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let positive = [
            ("n_residual_blocks", self.n_residual_blocks),
            ("convs_per_block", self.convs_per_block),
            ("kernel_len", self.kernel_len),
            ("base_filters", self.base_filters),
            ("filter_increment_every", self.filter_increment_every),
            ("subsample_every", self.subsample_every),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(NnError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NnError::InvalidConfig(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.n_classes < 2 {
            return Err(NnError::InvalidConfig("n_classes must be >= 2".into()));
        }
        Ok(())
    }

    /// Output channels of block `b` (0-based).
    pub fn channels_at_block(&self, b: usize) -> usize {
        self.base_filters * (1 + b / self.filter_increment_every)
    }

    /// Input channels of block `b`: the previous block's output, or the
    /// stem width for block 0.
    pub fn input_channels_at_block(&self, b: usize) -> usize {
        if b == 0 {
            self.base_filters
        } else {
            self.channels_at_block(b - 1)
        }
    }

    /// Time-axis stride of block `b`: 2 on every `subsample_every`-th
    /// block, else 1.
    pub fn block_stride(&self, b: usize) -> usize {
        if b % self.subsample_every == self.subsample_every - 1 {
            2
        } else {
            1
        }
    }

    /// Product of all block strides.
    pub fn total_subsample(&self) -> usize {
        (0..self.n_residual_blocks).map(|b| self.block_stride(b)).product()
    }

    /// (channels, length) after the stem and after each block.
    pub fn shape_trace(&self, input_len: usize) -> Vec<(usize, usize)> {
        let mut out = vec![(self.base_filters, input_len)];
        let mut len = input_len;
        for b in 0..self.n_residual_blocks {
            len = len.div_ceil(self.block_stride(b));
            out.push((self.channels_at_block(b), len));
        }
        out
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        self.shape_trace(input_len).last().unwrap().1
    }
}

/// One main-path unit: pre-activation BN followed by a convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitParams<S> {
    pub bn: BnParams<S>,
    pub conv: ConvFilter<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub config: ModelConfig,
    pub stem: ConvFilter<S>,
    pub blocks: Vec<Vec<UnitParams<S>>>,
    pub head_bn: BnParams<S>,
    pub head_linear: LinearParams<S>,
}

impl<S: Scalar> ModelParams<S> {
    /// He-normal initialization for convolutions and the head linear;
    /// batchnorm starts as the identity map.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut he_filter = |out_ch: usize, in_ch: usize, kernel: usize| {
            let mut f = ConvFilter::zeros(out_ch, in_ch, kernel);
            let std = (2.0 / (in_ch * kernel) as f64).sqrt();
            for w in &mut f.weight {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = S::from_f64(z * std);
            }
            f
        };
        let stem = he_filter(config.base_filters, 1, config.kernel_len);
        let mut blocks = Vec::with_capacity(config.n_residual_blocks);
        for b in 0..config.n_residual_blocks {
            let out_ch = config.channels_at_block(b);
            let mut units = Vec::with_capacity(config.convs_per_block);
            for u in 0..config.convs_per_block {
                let in_ch = if u == 0 { config.input_channels_at_block(b) } else { out_ch };
                units.push(UnitParams {
                    bn: BnParams::identity(in_ch),
                    conv: he_filter(out_ch, in_ch, config.kernel_len),
                });
            }
            blocks.push(units);
        }
        let head_ch = config.channels_at_block(config.n_residual_blocks - 1);
        let mut head_linear = LinearParams::zeros(config.n_classes, head_ch);
        let std = (2.0 / head_ch as f64).sqrt();
        for w in &mut head_linear.weight {
            let z: f64 = StandardNormal.sample(&mut rng);
            *w = S::from_f64(z * std);
        }
        Ok(Self {
            config: config.clone(),
            stem,
            blocks,
            head_bn: BnParams::identity(head_ch),
            head_linear,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.trainable_slices().iter().map(|s| s.len()).sum()
    }

    /// Trainable tensors in a fixed traversal order; gradients and
    /// optimizer state use the same order.
    pub fn trainable_slices(&self) -> Vec<&[S]> {
        let mut out: Vec<&[S]> = vec![&self.stem.weight, &self.stem.bias];
        for units in &self.blocks {
            for u in units {
                out.push(&u.bn.gamma);
                out.push(&u.bn.beta);
                out.push(&u.conv.weight);
                out.push(&u.conv.bias);
            }
        }
        out.push(&self.head_bn.gamma);
        out.push(&self.head_bn.beta);
        out.push(&self.head_linear.weight);
        out.push(&self.head_linear.bias);
        out
    }

    pub fn trainable_slices_mut(&mut self) -> Vec<&mut [S]> {
        let mut out: Vec<&mut [S]> = vec![&mut self.stem.weight, &mut self.stem.bias];
        for units in &mut self.blocks {
            for u in units {
                out.push(&mut u.bn.gamma);
                out.push(&mut u.bn.beta);
                out.push(&mut u.conv.weight);
                out.push(&mut u.conv.bias);
            }
        }
        out.push(&mut self.head_bn.gamma);
        out.push(&mut self.head_bn.beta);
        out.push(&mut self.head_linear.weight);
        out.push(&mut self.head_linear.bias);
        out
    }

    /// Every persistent tensor (trainable plus running statistics) with
    /// a stable name, in a stable order. Checkpoints use this listing.
    pub fn named_tensors(&self) -> Vec<(String, &[S])> {
        let mut out: Vec<(String, &[S])> = vec![
            ("stem.weight".into(), self.stem.weight.as_slice()),
            ("stem.bias".into(), self.stem.bias.as_slice()),
        ];
        for (b, units) in self.blocks.iter().enumerate() {
            for (u, unit) in units.iter().enumerate() {
                let p = format!("block{b}.unit{u}");
                out.push((format!("{p}.bn.gamma"), unit.bn.gamma.as_slice()));
                out.push((format!("{p}.bn.beta"), unit.bn.beta.as_slice()));
                out.push((format!("{p}.bn.running_mean"), unit.bn.running_mean.as_slice()));
                out.push((format!("{p}.bn.running_var"), unit.bn.running_var.as_slice()));
                out.push((format!("{p}.conv.weight"), unit.conv.weight.as_slice()));
                out.push((format!("{p}.conv.bias"), unit.conv.bias.as_slice()));
            }
        }
        out.push(("head.bn.gamma".into(), self.head_bn.gamma.as_slice()));
        out.push(("head.bn.beta".into(), self.head_bn.beta.as_slice()));
        out.push(("head.bn.running_mean".into(), self.head_bn.running_mean.as_slice()));
        out.push(("head.bn.running_var".into(), self.head_bn.running_var.as_slice()));
        out.push(("head.linear.weight".into(), self.head_linear.weight.as_slice()));
        out.push(("head.linear.bias".into(), self.head_linear.bias.as_slice()));
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut [S])> {
        let mut out: Vec<(String, &mut [S])> = vec![
            ("stem.weight".into(), self.stem.weight.as_mut_slice()),
            ("stem.bias".into(), self.stem.bias.as_mut_slice()),
        ];
        for (b, units) in self.blocks.iter_mut().enumerate() {
            for (u, unit) in units.iter_mut().enumerate() {
                let p = format!("block{b}.unit{u}");
                out.push((format!("{p}.bn.gamma"), unit.bn.gamma.as_mut_slice()));
                out.push((format!("{p}.bn.beta"), unit.bn.beta.as_mut_slice()));
                out.push((format!("{p}.bn.running_mean"), unit.bn.running_mean.as_mut_slice()));
                out.push((format!("{p}.bn.running_var"), unit.bn.running_var.as_mut_slice()));
                out.push((format!("{p}.conv.weight"), unit.conv.weight.as_mut_slice()));
                out.push((format!("{p}.conv.bias"), unit.conv.bias.as_mut_slice()));
            }
        }
        out.push(("head.bn.gamma".into(), self.head_bn.gamma.as_mut_slice()));
        out.push(("head.bn.beta".into(), self.head_bn.beta.as_mut_slice()));
        out.push(("head.bn.running_mean".into(), self.head_bn.running_mean.as_mut_slice()));
        out.push(("head.bn.running_var".into(), self.head_bn.running_var.as_mut_slice()));
        out.push(("head.linear.weight".into(), self.head_linear.weight.as_mut_slice()));
        out.push(("head.linear.bias".into(), self.head_linear.bias.as_mut_slice()));
        out
    }

    pub fn cast<T: Scalar>(&self) -> ModelParams<T> {
        let cast_vec = |v: &[S]| v.iter().map(|&x| T::from_f64(x.to_f64())).collect::<Vec<T>>();
        let cast_conv = |c: &ConvFilter<S>| ConvFilter {
            out_ch: c.out_ch,
            in_ch: c.in_ch,
            kernel: c.kernel,
            weight: cast_vec(&c.weight),
            bias: cast_vec(&c.bias),
        };
        let cast_bn = |b: &BnParams<S>| BnParams {
            gamma: cast_vec(&b.gamma),
            beta: cast_vec(&b.beta),
            running_mean: cast_vec(&b.running_mean),
            running_var: cast_vec(&b.running_var),
        };
        ModelParams {
            config: self.config.clone(),
            stem: cast_conv(&self.stem),
            blocks: self
                .blocks
                .iter()
                .map(|units| {
                    units
                        .iter()
                        .map(|u| UnitParams { bn: cast_bn(&u.bn), conv: cast_conv(&u.conv) })
                        .collect()
                })
                .collect(),
            head_bn: cast_bn(&self.head_bn),
            head_linear: LinearParams {
                out_features: self.head_linear.out_features,
                in_features: self.head_linear.in_features,
                weight: cast_vec(&self.head_linear.weight),
                bias: cast_vec(&self.head_linear.bias),
            },
        }
    }
}

/// Gradients for one unit, mirroring [`UnitParams`].
#[derive(Debug, Clone)]
pub struct UnitGrads<S> {
    pub bn_gamma: Vec<S>,
    pub bn_beta: Vec<S>,
    pub conv_weight: Vec<S>,
    pub conv_bias: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct ModelGrads<S> {
    pub stem_weight: Vec<S>,
    pub stem_bias: Vec<S>,
    pub blocks: Vec<Vec<UnitGrads<S>>>,
    pub head_bn_gamma: Vec<S>,
    pub head_bn_beta: Vec<S>,
    pub head_linear_weight: Vec<S>,
    pub head_linear_bias: Vec<S>,
}

impl<S: Scalar> ModelGrads<S> {
    /// Same traversal order as [`ModelParams::trainable_slices`].
    pub fn slices(&self) -> Vec<&[S]> {
        let mut out: Vec<&[S]> = vec![&self.stem_weight, &self.stem_bias];
        for units in &self.blocks {
            for u in units {
                out.push(&u.bn_gamma);
                out.push(&u.bn_beta);
                out.push(&u.conv_weight);
                out.push(&u.conv_bias);
            }
        }
        out.push(&self.head_bn_gamma);
        out.push(&self.head_bn_beta);
        out.push(&self.head_linear_weight);
        out.push(&self.head_linear_bias);
        out
    }
}

struct UnitCache<S> {
    bn: BnCache<S>,
    relu_out: Tensor3<S>,
    mask: Vec<bool>,
    conv_in: Tensor3<S>,
}

struct BlockCache<S> {
    units: Vec<UnitCache<S>>,
    pool_argmax: Vec<usize>,
    input_shape: (usize, usize, usize),
    stride: usize,
}

/// Everything the backward pass needs from a training forward.
pub struct Trace<S> {
    input: Tensor3<S>,
    blocks: Vec<BlockCache<S>>,
    head_bn: BnCache<S>,
    head_relu: Tensor3<S>,
    pub probs: Tensor3<S>,
}

fn add_into<S: Scalar>(dst: &mut Tensor3<S>, src: &Tensor3<S>) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (d, &s) in dst.data.iter_mut().zip(&src.data) {
        *d += s;
    }
}

/// Copy `x` into a wider tensor, leaving appended channels zero.
fn pad_channels<S: Scalar>(x: &Tensor3<S>, new_channels: usize) -> Tensor3<S> {
    debug_assert!(new_channels >= x.channels);
    let mut out = Tensor3::zeros(x.batch, new_channels, x.len);
    for b in 0..x.batch {
        for c in 0..x.channels {
            out.row_mut(b, c).copy_from_slice(x.row(b, c));
        }
    }
    out
}

/// Inverse of [`pad_channels`] for gradients: keep the first
/// `channels` rows.
fn truncate_channels<S: Scalar>(g: &Tensor3<S>, channels: usize) -> Tensor3<S> {
    debug_assert!(channels <= g.channels);
    let mut out = Tensor3::zeros(g.batch, channels, g.len);
    for b in 0..g.batch {
        for c in 0..channels {
            out.row_mut(b, c).copy_from_slice(g.row(b, c));
        }
    }
    out
}

/// SplitMix-style mixer deriving independent RNG streams from one
/// base seed.
pub(crate) fn mix_seed(base: u64, layer: u64) -> u64 {
    let mut z = base ^ layer.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_input<S: Scalar>(params: &ModelParams<S>, x: &Tensor3<S>) -> Result<(), NnError> {
    if x.channels != 1 {
        return Err(NnError::ShapeMismatch(format!(
            "model expects single-lead input, got {} channels",
            x.channels
        )));
    }
    if x.batch == 0 || x.len == 0 {
        return Err(NnError::ShapeMismatch("empty input tensor".into()));
    }
    params.config.validate()
}

/// Training forward: batch statistics in the BN layers (running stats
/// are updated in place) and active dropout. The whole pass is a pure
/// function of (params, x, dropout_seed).
pub fn forward_train<S: Scalar>(
    params: &mut ModelParams<S>,
    x: &Tensor3<S>,
    dropout_seed: u64,
) -> Result<(Tensor3<S>, Trace<S>), NnError> {
    check_input(params, x)?;
    let rate = params.config.dropout_rate;
    let mut layer = 0u64;
    let mut cur = conv1d_forward(x, &params.stem, 1)?;
    let mut blocks = Vec::with_capacity(params.blocks.len());
    for (b, units) in params.blocks.iter_mut().enumerate() {
        let stride = params.config.block_stride(b);
        let out_ch = params.config.channels_at_block(b);
        let input_shape = cur.shape();
        let (pooled, pool_argmax) = maxpool1d_forward(&cur, stride);
        let shortcut = pad_channels(&pooled, out_ch);
        let mut h = cur;
        let mut unit_caches = Vec::with_capacity(units.len());
        for (u, unit) in units.iter_mut().enumerate() {
            let (bn_out, bn_cache) = batchnorm_train(&h, &mut unit.bn)?;
            let relu_out = relu_forward(&bn_out);
            let (dropped, mask) = dropout_forward(&relu_out, rate, mix_seed(dropout_seed, layer));
            layer += 1;
            let unit_stride = if u == 0 { stride } else { 1 };
            h = conv1d_forward(&dropped, &unit.conv, unit_stride)?;
            unit_caches.push(UnitCache { bn: bn_cache, relu_out, mask, conv_in: dropped });
        }
        add_into(&mut h, &shortcut);
        blocks.push(BlockCache { units: unit_caches, pool_argmax, input_shape, stride });
        cur = h;
    }
    let (bn_out, head_bn_cache) = batchnorm_train(&cur, &mut params.head_bn)?;
    let head_relu = relu_forward(&bn_out);
    let logits = linear_forward(&head_relu, &params.head_linear)?;
    let probs = softmax_channels(&logits);
    let trace = Trace {
        input: x.clone(),
        blocks,
        head_bn: head_bn_cache,
        head_relu,
        probs: probs.clone(),
    };
    Ok((probs, trace))
}

/// Inference forward: running statistics, no dropout, no state change.
pub fn forward_eval<S: Scalar>(params: &ModelParams<S>, x: &Tensor3<S>) -> Result<Tensor3<S>, NnError> {
    check_input(params, x)?;
    let mut cur = conv1d_forward(x, &params.stem, 1)?;
    for (b, units) in params.blocks.iter().enumerate() {
        let stride = params.config.block_stride(b);
        let out_ch = params.config.channels_at_block(b);
        let (pooled, _) = maxpool1d_forward(&cur, stride);
        let shortcut = pad_channels(&pooled, out_ch);
        let mut h = cur;
        for (u, unit) in units.iter().enumerate() {
            let bn_out = batchnorm_eval(&h, &unit.bn);
            let relu_out = relu_forward(&bn_out);
            let unit_stride = if u == 0 { stride } else { 1 };
            h = conv1d_forward(&relu_out, &unit.conv, unit_stride)?;
        }
        add_into(&mut h, &shortcut);
        cur = h;
    }
    let bn_out = batchnorm_eval(&cur, &params.head_bn);
    let relu_out = relu_forward(&bn_out);
    let logits = linear_forward(&relu_out, &params.head_linear)?;
    Ok(softmax_channels(&logits))
}

/// Backward pass for a training forward. `labels[b]` is the class of
/// window `b`; the softmax/cross-entropy pair is differentiated as one
/// fused step.
pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    trace: &Trace<S>,
    labels: &[usize],
) -> ModelGrads<S> {
    let rate = params.config.dropout_rate;
    let mut g = cross_entropy_grad_logits(&trace.probs, labels);
    let (gx, head_w, head_b) = linear_backward(&trace.head_relu, &params.head_linear, &g);
    g = relu_backward(&trace.head_relu, &gx);
    let (gx, head_gamma, head_beta) = batchnorm_backward(&params.head_bn, &trace.head_bn, &g);
    g = gx;

    let mut block_grads: Vec<Vec<UnitGrads<S>>> = Vec::with_capacity(params.blocks.len());
    for (b, units) in params.blocks.iter().enumerate().rev() {
        let cache = &trace.blocks[b];
        // Shortcut branch: un-pad the channels, then un-pool.
        let in_ch = cache.input_shape.1;
        let g_short = truncate_channels(&g, in_ch);
        let g_short = maxpool1d_backward(cache.input_shape, &cache.pool_argmax, &g_short);

        // Main branch, units in reverse.
        let mut unit_grads_rev: Vec<UnitGrads<S>> = Vec::with_capacity(units.len());
        let mut h_g = g;
        for (u, unit) in units.iter().enumerate().rev() {
            let ucache = &cache.units[u];
            let unit_stride = if u == 0 { cache.stride } else { 1 };
            let (gx, gw, gb) = conv1d_backward(&ucache.conv_in, &unit.conv, unit_stride, &h_g);
            let gd = dropout_backward(&ucache.mask, rate, &gx);
            let gr = relu_backward(&ucache.relu_out, &gd);
            let (gx, ggamma, gbeta) = batchnorm_backward(&unit.bn, &ucache.bn, &gr);
            h_g = gx;
            unit_grads_rev.push(UnitGrads {
                bn_gamma: ggamma,
                bn_beta: gbeta,
                conv_weight: gw,
                conv_bias: gb,
            });
        }
        unit_grads_rev.reverse();
        block_grads.push(unit_grads_rev);
        add_into(&mut h_g, &g_short);
        g = h_g;
    }
    block_grads.reverse();

    let (_, stem_w, stem_b) = conv1d_backward(&trace.input, &params.stem, 1, &g);
    ModelGrads {
        stem_weight: stem_w,
        stem_bias: stem_b,
        blocks: block_grads,
        head_bn_gamma: head_gamma,
        head_bn_beta: head_beta,
        head_linear_weight: head_w,
        head_linear_bias: head_b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            n_residual_blocks: 2,
            convs_per_block: 1,
            kernel_len: 3,
            base_filters: 4,
            filter_increment_every: 1,
            subsample_every: 1,
            dropout_rate: 0.0,
            n_classes: 2,
        }
    }

    #[test]
    fn default_channel_and_stride_schedule() {
        let c = ModelConfig::default();
        let channels: Vec<usize> = (0..16).map(|b| c.channels_at_block(b)).collect();
        assert_eq!(
            channels,
            vec![64, 64, 64, 64, 128, 128, 128, 128, 192, 192, 192, 192, 256, 256, 256, 256]
        );
        let strides: Vec<usize> = (0..16).map(|b| c.block_stride(b)).collect();
        assert_eq!(strides.iter().filter(|&&s| s == 2).count(), 8);
        assert_eq!(strides[0], 1);
        assert_eq!(strides[1], 2);
        assert_eq!(c.total_subsample(), 256);
        assert_eq!(c.output_len(6144), 24);
        // Block 4 widens 64 -> 128.
        assert_eq!(c.input_channels_at_block(4), 64);
        assert_eq!(c.channels_at_block(4), 128);
    }

    #[test]
    fn shape_trace_default() {
        let c = ModelConfig::default();
        let trace = c.shape_trace(6144);
        assert_eq!(trace.first(), Some(&(64, 6144)));
        assert_eq!(trace.last(), Some(&(256, 24)));
        assert_eq!(trace.len(), 17);
    }

    #[test]
    fn validate_rejects_bad_configs() {
        let mut c = ModelConfig::default();
        c.n_classes = 1;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.dropout_rate = 1.0;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.kernel_len = 0;
        assert!(c.validate().is_err());
        assert!(ModelConfig::default().validate().is_ok());
    }

    #[test]
    fn forward_shapes_and_probabilities() {
        let cfg = tiny_config();
        // subsample_every = 1: both blocks stride 2, so 16 -> 8 -> 4.
        let mut params = ModelParams::<f32>::init(&cfg, 11).unwrap();
        let x = Tensor3::from_vec(2, 1, 16, (0..32).map(|i| (i as f32).sin()).collect());
        let (probs, _) = forward_train(&mut params, &x, 0).unwrap();
        assert_eq!(probs.shape(), (2, 2, 4));
        for b in 0..2 {
            for t in 0..4 {
                let s: f32 = (0..2).map(|c| probs.at(b, c, t)).sum();
                assert!((s - 1.0).abs() < 1e-5);
            }
        }
        let eval_probs = forward_eval(&params, &x).unwrap();
        assert_eq!(eval_probs.shape(), (2, 2, 4));
        assert!(eval_probs.all_finite());
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        // With all-zero convolutions and linear head, logits are zero
        // and the softmax is exactly uniform; the residual shortcuts
        // are the only signal path and the head BN removes it.
        let cfg = tiny_config();
        let mut params = ModelParams::<f32>::init(&cfg, 0).unwrap();
        for s in params.trainable_slices_mut() {
            for v in s {
                *v = 0.0;
            }
        }
        let x = Tensor3::from_vec(1, 1, 8, vec![0.5; 8]);
        let probs = forward_eval(&params, &x).unwrap();
        for &p in &probs.data {
            assert!((p - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn init_is_seed_deterministic() {
        let cfg = tiny_config();
        let a = ModelParams::<f32>::init(&cfg, 5).unwrap();
        let b = ModelParams::<f32>::init(&cfg, 5).unwrap();
        assert_eq!(a, b);
        let c = ModelParams::<f32>::init(&cfg, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn forward_train_is_deterministic_given_seed() {
        let mut cfg = tiny_config();
        cfg.dropout_rate = 0.3;
        let x = Tensor3::from_vec(2, 1, 16, (0..32).map(|i| (i as f32 * 0.37).cos()).collect());
        let p0 = ModelParams::<f32>::init(&cfg, 3).unwrap();
        let mut pa = p0.clone();
        let mut pb = p0.clone();
        let (a, _) = forward_train(&mut pa, &x, 99).unwrap();
        let (b, _) = forward_train(&mut pb, &x, 99).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(pa, pb); // running stats advanced identically
        let mut pc = p0.clone();
        let (c, _) = forward_train(&mut pc, &x, 100).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn grads_align_with_trainable_slices() {
        let cfg = tiny_config();
        let mut params = ModelParams::<f32>::init(&cfg, 2).unwrap();
        let x = Tensor3::from_vec(2, 1, 8, (0..16).map(|i| i as f32 * 0.1).collect());
        let (_, trace) = forward_train(&mut params, &x, 0).unwrap();
        let grads = backward(&params, &trace, &[0, 1]);
        let ps = params.trainable_slices();
        let gs = grads.slices();
        assert_eq!(ps.len(), gs.len());
        for (p, g) in ps.iter().zip(&gs) {
            assert_eq!(p.len(), g.len());
        }
        // 2 stem + 2 blocks * 1 unit * 4 + 4 head = 14 groups.
        assert_eq!(ps.len(), 14);
    }

    #[test]
    fn rejects_multi_channel_input() {
        let cfg = tiny_config();
        let params = ModelParams::<f32>::init(&cfg, 0).unwrap();
        let x = Tensor3::<f32>::zeros(1, 2, 8);
        assert!(matches!(forward_eval(&params, &x), Err(NnError::ShapeMismatch(_))));
    }

    #[test]
    fn named_tensors_cover_running_stats() {
        let cfg = tiny_config();
        let params = ModelParams::<f32>::init(&cfg, 0).unwrap();
        let names: Vec<String> = params.named_tensors().into_iter().map(|(n, _)| n).collect();
        assert!(names.contains(&"stem.weight".to_string()));
        assert!(names.contains(&"block0.unit0.bn.running_mean".to_string()));
        assert!(names.contains(&"block1.unit0.conv.bias".to_string()));
        assert!(names.contains(&"head.linear.weight".to_string()));
        // trainable (14 groups) + running stats (2 per BN, 3 BNs).
        assert_eq!(names.len(), 14 + 6);
    }

    #[test]
    fn cast_round_trips_f64() {
        let cfg = tiny_config();
        let params = ModelParams::<f32>::init(&cfg, 4).unwrap();
        let back: ModelParams<f32> = params.cast::<f64>().cast::<f32>();
        assert_eq!(params, back);
    }
}
