//! L2-penalized logistic regression on standardized features, fitted by
//! damped Newton iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};

use super::Dataset;

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    /// Standardization scales; zero-variance features get 1.
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn sigmoid(z: f64) -> f64 {
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

fn score(w: &[f64], b: f64, z: &[f64]) -> f64 {
    b + w.iter().zip(z).map(|(a, x)| a * x).sum::<f64>()
}

/// Negative log-likelihood plus `l2 / 2 * |w|^2` (the bias is not penalized).
/// `y` holds 1.0 for the positive class and 0.0 otherwise.
pub fn penalized_loss(w: &[f64], b: f64, z: &[Vec<f64>], y: &[f64], l2: f64) -> f64 {
    let nll: f64 = z
        .iter()
        .zip(y)
        .map(|(row, &t)| {
            let s = score(w, b, row);
            softplus(s) - t * s
        })
        .sum();
    nll + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`penalized_loss`] with respect to `(w, b)`.
pub fn penalized_gradient(w: &[f64], b: f64, z: &[Vec<f64>], y: &[f64], l2: f64) -> (Vec<f64>, f64) {
    let mut gw: Vec<f64> = w.iter().map(|v| l2 * v).collect();
    let mut gb = 0.0;
    for (row, &t) in z.iter().zip(y) {
        let r = sigmoid(score(w, b, row)) - t;
        gb += r;
        for (g, x) in gw.iter_mut().zip(row) {
            *g += r * x;
        }
    }
    (gw, gb)
}

fn standardize(x: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let means: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let scales = (0..d)
        .map(|j| {
            let sd = (x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt();
            // rounding noise on a constant column counts as zero variance
            if sd > 1e-12 * means[j].abs() && sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (means, scales)
}

impl LogRegModel {
    pub fn standardized(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// P(positive class).
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(score(&self.weights, self.bias, &self.standardized(x)))
    }

    /// Coefficients expressed on the original feature scale.
    pub fn raw_weights(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.scales).map(|(w, s)| w / s).collect()
    }
}

pub fn train_logreg(data: &Dataset, l2: f64) -> Result<LogRegModel> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(GazeError::InvalidConfig(format!("l2 must be >= 0, got {l2}")));
    }
    data.check_trainable()?;
    let d = data.n_features();
    let (means, scales) = standardize(&data.x, d);
    let z: Vec<Vec<f64>> = data
        .x
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| (v - means[j]) / scales[j]).collect())
        .collect();
    let y = data.targets();

    // intercept-only start at the class prior
    let prior = y.iter().sum::<f64>() / y.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = (prior / (1.0 - prior)).ln();
    let mut loss = penalized_loss(&w, b, &z, &y, l2);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        let (gw, gb) = penalized_gradient(&w, b, &z, &y, l2);
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax <= GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;

        // Hessian over (b, w)
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for row in &z {
            let p = sigmoid(score(&w, b, row));
            let s = p * (1.0 - p);
            h[(0, 0)] += s;
            for j in 0..d {
                h[(0, j + 1)] += s * row[j];
                for k in j..d {
                    h[(j + 1, k + 1)] += s * row[j] * row[k];
                }
            }
        }
        for j in 0..=d {
            for k in 0..j {
                h[(j, k)] = h[(k, j)];
            }
        }
        for j in 1..=d {
            h[(j, j)] += l2;
        }
        let grad = DVector::from_iterator(d + 1, std::iter::once(gb).chain(gw.iter().copied()));
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => {
                let ridge = 1e-8 * (1.0 + h.diagonal().amax());
                let hr = h + DMatrix::identity(d + 1, d + 1) * ridge;
                hr.cholesky().map(|c| c.solve(&grad)).unwrap_or_else(|| grad.clone())
            }
        };

        // backtracking on the loss
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let nb = b - t * step[0];
            let nw: Vec<f64> = w.iter().enumerate().map(|(j, v)| v - t * step[j + 1]).collect();
            let nl = penalized_loss(&nw, nb, &z, &y, l2);
            if nl <= loss {
                b = nb;
                w = nw;
                loss = nl;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        let (gw, gb) = penalized_gradient(&w, b, &z, &y, l2);
        converged = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs())) <= GRADIENT_TOLERANCE;
    }

    Ok(LogRegModel {
        feature_names: data.names.clone(),
        means,
        scales,
        weights: w,
        bias: b,
        l2,
        iterations,
        converged,
    })
}
