//! Cross-entropy over per-timestep class probabilities.
//!
//! Each window carries a single label that applies to every output
//! timestep; the loss averages over batch x time.

use super::scalar::Scalar;
use super::tensor::Tensor3;

/// Floor applied inside the log so a saturated softmax cannot produce
/// an infinite loss.
pub const LOG_FLOOR: f64 = 1e-12;

/// Mean negative log-likelihood of `labels[b]` under `probs[b][.][t]`.
pub fn cross_entropy_loss<S: Scalar>(probs: &Tensor3<S>, labels: &[usize]) -> f64 {
    assert_eq!(probs.batch, labels.len());
    let mut total = 0.0f64;
    for (b, &y) in labels.iter().enumerate() {
        debug_assert!(y < probs.channels);
        for t in 0..probs.len {
            total -= probs.at(b, y, t).to_f64().max(LOG_FLOOR).ln();
        }
    }
    total / (probs.batch * probs.len) as f64
}

/// Gradient of the mean cross-entropy with respect to the *logits*
/// that produced `probs` via channel softmax: (p - onehot) / (B*T).
pub fn cross_entropy_grad_logits<S: Scalar>(probs: &Tensor3<S>, labels: &[usize]) -> Tensor3<S> {
    assert_eq!(probs.batch, labels.len());
    let norm = 1.0 / (probs.batch * probs.len) as f64;
    let mut grad = Tensor3::zeros(probs.batch, probs.channels, probs.len);
    for (b, &y) in labels.iter().enumerate() {
        for c in 0..probs.channels {
            let onehot = if c == y { 1.0 } else { 0.0 };
            for t in 0..probs.len {
                *grad.at_mut(b, c, t) = S::from_f64((probs.at(b, c, t).to_f64() - onehot) * norm);
            }
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::super::ops::softmax_channels;
    use super::*;

    #[test]
    fn uniform_two_class_loss_is_ln_two() {
        let probs = Tensor3::from_vec(2, 2, 3, vec![0.5f64; 12]);
        let loss = cross_entropy_loss(&probs, &[0, 1]);
        assert!((loss - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let probs = Tensor3::from_vec(1, 2, 2, vec![0.999f64, 0.999, 0.001, 0.001]);
        assert!(cross_entropy_loss(&probs, &[0]) < 2e-3);
    }

    #[test]
    fn zero_probability_is_clamped_finite() {
        let probs = Tensor3::from_vec(1, 2, 1, vec![0.0f64, 1.0]);
        let loss = cross_entropy_loss(&probs, &[0]);
        assert!(loss.is_finite());
        assert!((loss - (-LOG_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn uniform_gradient_golden() {
        let probs = Tensor3::from_vec(1, 2, 2, vec![0.5f64; 4]);
        let g = cross_entropy_grad_logits(&probs, &[1]);
        // (0.5 - onehot) / (B*T) with B*T = 2.
        assert_eq!(g.data, vec![0.25, 0.25, -0.25, -0.25]);
    }

    #[test]
    fn grad_logits_matches_finite_difference_through_softmax() {
        let logits = Tensor3::from_vec(2, 3, 2, vec![
            0.3f64, -1.2, 0.8, 0.1, -0.4, 2.0, 1.1, 0.0, -0.7, 0.2, 0.9, -1.5,
        ]);
        let labels = [2usize, 0];
        let probs = softmax_channels(&logits);
        let grad = cross_entropy_grad_logits(&probs, &labels);
        let h = 1e-6;
        for idx in 0..logits.data.len() {
            let mut lp = logits.clone();
            lp.data[idx] += h;
            let mut lm = logits.clone();
            lm.data[idx] -= h;
            let fp = cross_entropy_loss(&softmax_channels(&lp), &labels);
            let fm = cross_entropy_loss(&softmax_channels(&lm), &labels);
            let num = (fp - fm) / (2.0 * h);
            assert!(
                (num - grad.data[idx]).abs() < 1e-8,
                "idx {idx}: {num} vs {}",
                grad.data[idx]
            );
        }
    }
}
