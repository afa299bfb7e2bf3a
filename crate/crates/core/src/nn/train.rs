//! Training loop: shuffled mini-batches, Adam, reduce-on-plateau, and
//! best-by-validation-loss checkpoint selection. The whole run is a
//! pure function of (configs, data, seed).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{EcgWindow, Label};
use crate::eval::roc_auc;

use super::loss::cross_entropy_loss;
use super::model::{backward, forward_eval, forward_train, mix_seed, ModelConfig, ModelParams};
use super::optim::{Adam, PlateauScheduler, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON, DEFAULT_LR};
use super::tensor::Tensor3;
use super::NnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub plateau_threshold: f64,
    /// Stop as soon as validation AUC reaches this value, if set.
    pub early_stop_val_auc: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: DEFAULT_LR,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            plateau_patience: 3,
            plateau_factor: 0.1,
            plateau_threshold: 1e-4,
            early_stop_val_auc: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |msg: String| Err(NnError::InvalidConfig(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return bad(format!("{name} must be in [0, 1), got {beta}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        if self.plateau_patience == 0 {
            return bad("plateau_patience must be >= 1".into());
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor <= 1.0) {
            return bad(format!("plateau_factor must be in (0, 1], got {}", self.plateau_factor));
        }
        if !(self.plateau_threshold >= 0.0) {
            return bad("plateau_threshold must be >= 0".into());
        }
        if let Some(target) = self.early_stop_val_auc {
            if !(0.0..=1.0).contains(&target) {
                return bad(format!("early_stop_val_auc must be in [0, 1], got {target}"));
            }
        }
        Ok(())
    }
}

/// One history row; `lr` is the rate in effect during the epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: f64,
    pub lr: f64,
}

pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: ModelParams<f32>,
    pub history: Vec<EpochStats>,
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,val_auc,lr\n");
    for row in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.epoch, row.train_loss, row.val_loss, row.val_auc, row.lr
        ));
    }
    out
}

fn batch_tensor(windows: &[&EcgWindow]) -> (Tensor3<f32>, Vec<usize>) {
    let len = windows[0].samples.len();
    let mut data = Vec::with_capacity(windows.len() * len);
    let mut labels = Vec::with_capacity(windows.len());
    for w in windows {
        data.extend_from_slice(&w.samples);
        labels.push(w.label.class_index());
    }
    (Tensor3::from_vec(windows.len(), 1, len, data), labels)
}

fn check_uniform_len(windows: &[&EcgWindow], expected: usize) -> Result<(), NnError> {
    for w in windows {
        if w.samples.len() != expected {
            return Err(NnError::ShapeMismatch(format!(
                "window length {} differs from {}",
                w.samples.len(),
                expected
            )));
        }
    }
    Ok(())
}

/// Mean predicted probability of the ischemic class per window, in
/// eval mode.
pub fn score_windows(
    params: &ModelParams<f32>,
    windows: &[EcgWindow],
    batch_size: usize,
) -> Result<Vec<f64>, NnError> {
    assert!(batch_size >= 1);
    let mut scores = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(batch_size) {
        let refs: Vec<&EcgWindow> = chunk.iter().collect();
        let (x, _) = batch_tensor(&refs);
        let probs = forward_eval(params, &x)?;
        for b in 0..probs.batch {
            let row = probs.row(b, Label::Ischemic.class_index());
            let mean = row.iter().map(|&p| f64::from(p)).sum::<f64>() / row.len() as f64;
            scores.push(mean);
        }
    }
    Ok(scores)
}

fn evaluate(
    params: &ModelParams<f32>,
    windows: &[EcgWindow],
    batch_size: usize,
) -> Result<(f64, f64), NnError> {
    let mut loss_sum = 0.0f64;
    let mut count = 0usize;
    for chunk in windows.chunks(batch_size) {
        let refs: Vec<&EcgWindow> = chunk.iter().collect();
        let (x, labels) = batch_tensor(&refs);
        let probs = forward_eval(params, &x)?;
        loss_sum += cross_entropy_loss(&probs, &labels) * chunk.len() as f64;
        count += chunk.len();
    }
    let val_loss = loss_sum / count as f64;
    let scores = score_windows(params, windows, batch_size)?;
    let labels: Vec<bool> = windows.iter().map(|w| w.label == Label::Ischemic).collect();
    // A single-class validation set has no defined AUC; report NaN
    // rather than failing the run.
    let val_auc = roc_auc(&scores, &labels).map_or(f64::NAN, |a| a);
    Ok((val_loss, val_auc))
}

pub fn train_model(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    train: &[EcgWindow],
    validation: &[EcgWindow],
    seed: u64,
) -> Result<TrainOutcome, NnError> {
    if train.is_empty() {
        return Err(NnError::EmptySplit("train"));
    }
    if validation.is_empty() {
        return Err(NnError::EmptySplit("validation"));
    }
    train_cfg.validate()?;
    let window_len = train[0].samples.len();
    check_uniform_len(&train.iter().collect::<Vec<_>>(), window_len)?;
    check_uniform_len(&validation.iter().collect::<Vec<_>>(), window_len)?;

    let mut params = ModelParams::<f32>::init(model_cfg, seed)?;
    let mut adam = Adam::new(&params, train_cfg.beta1, train_cfg.beta2, train_cfg.epsilon);
    let mut scheduler = PlateauScheduler::new(
        train_cfg.learning_rate,
        train_cfg.plateau_patience,
        train_cfg.plateau_factor,
        train_cfg.plateau_threshold,
    );
    let mut best_params = params.clone();
    let mut best_val_loss = f64::INFINITY;
    let mut history = Vec::with_capacity(train_cfg.epochs);
    let mut indices: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=train_cfg.epochs {
        let lr = scheduler.lr();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, epoch as u64));
        indices.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0f64;
        let mut seen = 0usize;
        for (batch_idx, chunk) in indices.chunks(train_cfg.batch_size).enumerate() {
            let refs: Vec<&EcgWindow> = chunk.iter().map(|&i| &train[i]).collect();
            let (x, labels) = batch_tensor(&refs);
            let dropout_seed = mix_seed(mix_seed(seed, epoch as u64), 0x1000 + batch_idx as u64);
            let (probs, trace) = forward_train(&mut params, &x, dropout_seed)?;
            loss_sum += cross_entropy_loss(&probs, &labels) * chunk.len() as f64;
            seen += chunk.len();
            let grads = backward(&params, &trace, &labels);
            adam.step(&mut params, &grads, lr)?;
        }
        let train_loss = loss_sum / seen as f64;
        let (val_loss, val_auc) = evaluate(&params, validation, train_cfg.batch_size)?;
        history.push(EpochStats { epoch, train_loss, val_loss, val_auc, lr });

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_params = params.clone();
        }
        scheduler.observe(val_loss);
        if let Some(target) = train_cfg.early_stop_val_auc {
            if val_auc >= target {
                break;
            }
        }
    }
    Ok(TrainOutcome { params: best_params, history })
}
