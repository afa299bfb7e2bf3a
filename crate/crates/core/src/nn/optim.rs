//! Adam with bias correction, plus a reduce-on-plateau schedule.

use super::model::{ModelGrads, ModelParams};
use super::scalar::Scalar;
use super::NnError;

pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// First/second moment state per trainable slice, kept in f64 no
/// matter what the parameters store.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<S: Scalar>(params: &ModelParams<S>, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let shapes: Vec<usize> = params.trainable_slices().iter().map(|s| s.len()).collect();
        Self {
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn with_defaults<S: Scalar>(params: &ModelParams<S>) -> Self {
        Self::new(params, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON)
    }

    /// One update. Refuses to apply a non-finite gradient so a
    /// diverged batch cannot poison the parameters.
    pub fn step<S: Scalar>(
        &mut self,
        params: &mut ModelParams<S>,
        grads: &ModelGrads<S>,
        lr: f64,
    ) -> Result<(), NnError> {
        let grad_slices = grads.slices();
        for (gi, g) in grad_slices.iter().enumerate() {
            for (i, &v) in g.iter().enumerate() {
                if !v.is_finite_scalar() {
                    return Err(NnError::NonFiniteGradient { group: gi, index: i });
                }
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let param_slices = params.trainable_slices_mut();
        debug_assert_eq!(param_slices.len(), grad_slices.len());
        for ((p, g), (m, v)) in param_slices
            .into_iter()
            .zip(grad_slices)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            debug_assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                let gi = g[i].to_f64();
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                let delta = lr * m_hat / (v_hat.sqrt() + self.epsilon);
                p[i] = S::from_f64(p[i].to_f64() - delta);
            }
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` after `patience`
/// consecutive epochs without meaningful validation improvement.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    lr: f64,
    best: f64,
    stale: usize,
    patience: usize,
    factor: f64,
    threshold: f64,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64, patience: usize, factor: f64, threshold: f64) -> Self {
        Self { lr: initial_lr, best: f64::INFINITY, stale: 0, patience, factor, threshold }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Feed one validation loss; returns the learning rate to use for
    /// the next epoch. "Improved" means strictly below
    /// `best * (1 - threshold)`.
    pub fn observe(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best * (1.0 - self.threshold) {
            self.best = val_loss;
            self.stale = 0;
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                self.lr *= self.factor;
                self.stale = 0;
            }
        }
        self.lr
    }
}
