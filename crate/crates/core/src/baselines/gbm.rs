//! Stagewise gradient boosting for the logistic loss. Each round fits
//! a small regression tree to the pseudo-residuals (label minus
//! predicted probability), then replaces every leaf with a Newton
//! step before adding the shrunken tree to the ensemble.

use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeConfig};
use super::{check_matrix, check_two_classes, BaselineError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmConfig {
    pub n_rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbmConfig {
    fn default() -> Self {
        Self { n_rounds: 100, shrinkage: 0.1, max_depth: 3, min_samples_leaf: 5 }
    }
}

#[derive(Debug, Clone)]
pub struct GradientBoosting {
    prior: f64,
    shrinkage: f64,
    trees: Vec<RegressionTree>,
    train_loss: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn mean_log_loss(scores: &[f64], y: &[bool]) -> f64 {
    let mut loss = 0.0f64;
    for (&z, &label) in scores.iter().zip(y) {
        // softplus(z) - t*z, numerically safe for large |z|.
        let t = if label { 1.0 } else { 0.0 };
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
    }
    loss / scores.len() as f64
}

impl GradientBoosting {
    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &GbmConfig) -> Result<Self, BaselineError> {
        check_matrix(x, y.len())?;
        check_two_classes(y)?;
        if !(0.0..=1.0).contains(&cfg.shrinkage) || cfg.shrinkage == 0.0 {
            return Err(BaselineError::InvalidConfig("shrinkage must be in (0, 1]".into()));
        }
        let n = x.len();
        let pos = y.iter().filter(|&&v| v).count() as f64;
        let p = (pos / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let prior = (p / (1.0 - p)).ln();
        let tree_cfg = TreeConfig { max_depth: cfg.max_depth, min_samples_leaf: cfg.min_samples_leaf };

        let mut scores = vec![prior; n];
        let mut trees = Vec::with_capacity(cfg.n_rounds);
        let mut train_loss = vec![mean_log_loss(&scores, y)];
        for _ in 0..cfg.n_rounds {
            let probs: Vec<f64> = scores.iter().map(|&z| sigmoid(z)).collect();
            let residuals: Vec<f64> = probs
                .iter()
                .zip(y)
                .map(|(&pi, &label)| if label { 1.0 - pi } else { -pi })
                .collect();
            let mut tree = RegressionTree::fit(x, &residuals, &tree_cfg)
                .expect("matrix already validated");

            // Newton leaf values: sum(residual) / sum(p(1-p)).
            let leaves = tree.leaf_assignments(x);
            let n_leaves = tree.leaf_count();
            let mut num = vec![0.0f64; n_leaves];
            let mut den = vec![0.0f64; n_leaves];
            for (i, &leaf) in leaves.iter().enumerate() {
                num[leaf] += residuals[i];
                den[leaf] += probs[i] * (1.0 - probs[i]);
            }
            let values: Vec<f64> =
                num.iter().zip(&den).map(|(&a, &b)| a / b.max(1e-12)).collect();
            tree.replace_leaf_values(&values);

            for (score, &leaf) in scores.iter_mut().zip(&leaves) {
                *score += cfg.shrinkage * values[leaf];
            }
            train_loss.push(mean_log_loss(&scores, y));
            trees.push(tree);
        }
        Ok(Self { prior, shrinkage: cfg.shrinkage, trees, train_loss })
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let z = self.prior
            + self.shrinkage * self.trees.iter().map(|t| t.predict(row)).sum::<f64>();
        sigmoid(z)
    }

    /// Training log-loss after round k (index 0 is the prior alone).
    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }
}
