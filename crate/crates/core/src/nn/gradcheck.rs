//! Central-difference validation of the analytic backward pass.
//!
//! The whole engine is generic over the scalar type, so the check
//! instantiates it at f64: truncation error then dominates and a
//! relative tolerance of 1e-4 is comfortably wide. Dropout masks are
//! seed-fixed, making the loss a deterministic function of the
//! parameters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::cross_entropy_loss;
use super::model::{backward, forward_train, ModelConfig, ModelParams};
use super::tensor::Tensor3;
use super::NnError;

#[derive(Debug, Clone)]
pub struct GroupReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_err).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_err() < self.tolerance
    }

    pub fn worst_group(&self) -> Option<&GroupReport> {
        self.groups
            .iter()
            .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
    }
}

/// Group names in [`ModelParams::trainable_slices`] order.
fn group_names(config: &ModelConfig) -> Vec<String> {
    let mut names = vec!["stem.weight".to_string(), "stem.bias".to_string()];
    for b in 0..config.n_residual_blocks {
        for u in 0..config.convs_per_block {
            let p = format!("block{b}.unit{u}");
            names.push(format!("{p}.bn.gamma"));
            names.push(format!("{p}.bn.beta"));
            names.push(format!("{p}.conv.weight"));
            names.push(format!("{p}.conv.bias"));
        }
    }
    names.extend([
        "head.bn.gamma".to_string(),
        "head.bn.beta".to_string(),
        "head.linear.weight".to_string(),
        "head.linear.bias".to_string(),
    ]);
    names
}

const SAMPLES_PER_GROUP: usize = 4;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-6)
}

fn run(
    config: &ModelConfig,
    seed: u64,
    tolerance: f64,
    inject_fault: bool,
) -> Result<GradCheckReport, NnError> {
    config.validate()?;
    let params = ModelParams::<f64>::init(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xC0FFEE));
    let batch = 2usize;
    let len = 32usize;
    let x = Tensor3::from_vec(
        batch,
        1,
        len,
        (0..batch * len).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
    );
    let labels: Vec<usize> = (0..batch).map(|b| b % config.n_classes).collect();
    let dropout_seed = seed ^ 0xD80F;

    let loss_at = |p: &ModelParams<f64>| -> Result<f64, NnError> {
        // Clone so running-stat updates never leak between probes; the
        // train-mode loss itself only depends on batch statistics.
        let mut pc = p.clone();
        let (probs, _) = forward_train(&mut pc, &x, dropout_seed)?;
        Ok(cross_entropy_loss(&probs, &labels))
    };

    let mut pc = params.clone();
    let (_, trace) = forward_train(&mut pc, &x, dropout_seed)?;
    let grads = backward(&params, &trace, &labels);
    let mut grad_slices: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    if inject_fault {
        grad_slices[0][0] += 1.0;
    }

    let names = group_names(config);
    debug_assert_eq!(names.len(), grad_slices.len());
    let mut groups = Vec::with_capacity(names.len());
    for (gi, name) in names.into_iter().enumerate() {
        let n = grad_slices[gi].len();
        let picks: Vec<usize> = if n <= SAMPLES_PER_GROUP {
            (0..n).collect()
        } else {
            (0..SAMPLES_PER_GROUP).map(|i| i * n / SAMPLES_PER_GROUP).collect()
        };
        let mut max_rel = 0.0f64;
        for &idx in &picks {
            let analytic = grad_slices[gi][idx];
            let mut best_rel = f64::INFINITY;
            // Retry with a smaller step if the first probe lands near a
            // ReLU kink or pooling tie.
            for h in [1e-5, 1e-6] {
                let mut plus = params.clone();
                plus.trainable_slices_mut()[gi][idx] += h;
                let mut minus = params.clone();
                minus.trainable_slices_mut()[gi][idx] -= h;
                let numeric = (loss_at(&plus)? - loss_at(&minus)?) / (2.0 * h);
                best_rel = best_rel.min(rel_err(analytic, numeric));
                if best_rel < tolerance {
                    break;
                }
            }
            max_rel = max_rel.max(best_rel);
        }
        groups.push(GroupReport { name, checked: picks.len(), max_rel_err: max_rel });
    }
    Ok(GradCheckReport { groups, tolerance })
}

pub fn gradient_check(config: &ModelConfig, seed: u64, tolerance: f64) -> Result<GradCheckReport, NnError> {
    run(config, seed, tolerance, false)
}

/// Same probe with one analytic gradient deliberately corrupted;
/// exists so the check itself can be shown to fail.
pub fn gradient_check_faulted(
    config: &ModelConfig,
    seed: u64,
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    run(config, seed, tolerance, true)
}

/// A small but structurally complete model: two blocks, two units per
/// block, one stride-2 block, one channel increase, active dropout.
pub fn check_config() -> ModelConfig {
    ModelConfig {
        n_residual_blocks: 2,
        convs_per_block: 2,
        kernel_len: 5,
        base_filters: 4,
        filter_increment_every: 2,
        subsample_every: 2,
        dropout_rate: 0.2,
        n_classes: 2,
    }
}
