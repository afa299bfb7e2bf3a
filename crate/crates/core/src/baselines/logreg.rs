//! L2-regularized logistic regression, fit by damped Newton (IRLS)
//! with a backtracking line search, so the loss decreases monotonically
//! and convergence is immune to the conditioning gap between the
//! regularized weights and the free bias. Features are standardized
//! internally; the bias is never regularized.

use serde::{Deserialize, Serialize};

use super::{check_matrix, check_two_classes, BaselineError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LogregConfig {
    pub l2: f64,
    pub max_iters: usize,
    /// Stop when the gradient's infinity norm falls below this.
    pub tol: f64,
}

impl Default for LogregConfig {
    fn default() -> Self {
        Self { l2: 1e-4, max_iters: 500, tol: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticRegression {
    weights: Vec<f64>,
    bias: f64,
    feat_mean: Vec<f64>,
    feat_std: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean cross-entropy plus 0.5 * l2 * ||w||^2, with its gradient.
fn loss_and_grad(
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0f64;
    let mut gw = vec![0.0f64; w.len()];
    let mut gb = 0.0f64;
    for (row, &label) in x.iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(xi, wi)| xi * wi).sum::<f64>();
        let t = if label { 1.0 } else { 0.0 };
        // -[t*ln p + (1-t)*ln(1-p)] = softplus(z) - t*z
        loss += softplus(z) - t * z;
        let err = sigmoid(z) - t;
        for (g, xi) in gw.iter_mut().zip(row) {
            *g += err * xi;
        }
        gb += err;
    }
    loss /= n;
    gb /= n;
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * *wi;
    }
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    (loss, gw, gb)
}

/// Hessian of the objective over theta = [w; b], row-major (d+1)^2.
fn hessian(x: &[Vec<f64>], w: &[f64], b: f64, l2: f64) -> Vec<Vec<f64>> {
    let d = w.len();
    let n = x.len() as f64;
    let mut h = vec![vec![0.0f64; d + 1]; d + 1];
    for row in x {
        let z = b + row.iter().zip(w).map(|(xi, wi)| xi * wi).sum::<f64>();
        let p = sigmoid(z);
        let weight = (p * (1.0 - p)).max(1e-12) / n;
        for i in 0..d {
            for j in i..d {
                h[i][j] += weight * row[i] * row[j];
            }
            h[i][d] += weight * row[i];
        }
        h[d][d] += weight;
    }
    for i in 0..d {
        h[i][i] += l2;
    }
    // Symmetrize the strict lower triangle and add a tiny ridge so the
    // Cholesky below cannot fail on degenerate data.
    for i in 0..=d {
        h[i][i] += 1e-10;
        for j in 0..i {
            h[i][j] = h[j][i];
        }
    }
    h
}

/// Solves H * out = rhs for symmetric positive-definite H.
fn cholesky_solve(h: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = h[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut fwd = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i][k] * fwd[k];
        }
        fwd[i] = sum / l[i][i];
    }
    let mut out = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = fwd[i];
        for k in i + 1..n {
            sum -= l[k][i] * out[k];
        }
        out[i] = sum / l[i][i];
    }
    Some(out)
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &LogregConfig) -> Result<Self, BaselineError> {
        let dim = check_matrix(x, y.len())?;
        check_two_classes(y)?;
        if cfg.l2 < 0.0 {
            return Err(BaselineError::InvalidConfig("l2 must be >= 0".into()));
        }

        // Standardize columns; constant columns keep std 1 so they
        // contribute nothing rather than exploding.
        let n = x.len() as f64;
        let mut feat_mean = vec![0.0f64; dim];
        for row in x {
            for (m, v) in feat_mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut feat_mean {
            *m /= n;
        }
        let mut feat_std = vec![0.0f64; dim];
        for row in x {
            for ((s, v), m) in feat_std.iter_mut().zip(row).zip(&feat_mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut feat_std {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        let xs: Vec<Vec<f64>> = x
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&feat_mean)
                    .zip(&feat_std)
                    .map(|((v, m), s)| (v - m) / s)
                    .collect()
            })
            .collect();

        let mut w = vec![0.0f64; dim];
        let mut b = 0.0f64;
        let (mut loss, mut gw, mut gb) = loss_and_grad(&xs, y, &w, b, cfg.l2);
        for _ in 0..cfg.max_iters {
            let gnorm_inf = gw.iter().fold(gb.abs(), |a, g| a.max(g.abs()));
            if gnorm_inf < cfg.tol {
                break;
            }
            let h = hessian(&xs, &w, b, cfg.l2);
            let mut grad = gw.clone();
            grad.push(gb);
            let Some(newton) = cholesky_solve(&h, &grad) else { break };
            // Directional derivative of the step -newton; negative by
            // positive definiteness.
            let descent: f64 = grad.iter().zip(&newton).map(|(g, d)| g * d).sum();
            // Backtrack until the Armijo condition holds, so the loss
            // sequence is monotone by construction.
            let mut t = 1.0f64;
            let mut accepted = false;
            for _ in 0..60 {
                let wt: Vec<f64> =
                    w.iter().zip(&newton).map(|(wi, d)| wi - t * d).collect();
                let bt = b - t * newton[dim];
                let (lt, gwt, gbt) = loss_and_grad(&xs, y, &wt, bt, cfg.l2);
                if lt <= loss - 1e-4 * t * descent {
                    w = wt;
                    b = bt;
                    loss = lt;
                    gw = gwt;
                    gb = gbt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break; // step underflowed: we are at numerical optimum
            }
        }
        Ok(Self { weights: w, bias: b, feat_mean, feat_std })
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        assert_eq!(row.len(), self.weights.len());
        let z = self.bias
            + row
                .iter()
                .zip(&self.feat_mean)
                .zip(&self.feat_std)
                .zip(&self.weights)
                .map(|(((v, m), s), w)| (v - m) / s * w)
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
