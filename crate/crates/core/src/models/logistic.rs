//! L2-regularized logistic regression fitted by gradient descent with
//! backtracking line search.

use serde::{Deserialize, Serialize};

use super::scale::Standardizer;
use crate::error::{Error, Result};
use crate::space::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop when the gradient infinity norm drops below this.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_iters: 2000,
            tol: 1e-6,
        }
    }
}

/// `P(pass | v) = sigmoid(intercept + coefficients . v)` on raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    scaler: Standardizer,
    /// Intercept first, in standardized coordinates.
    weights: Vec<f64>,
    pub iterations: usize,
    pub loss_history: Vec<f64>,
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

// log(1 + e^a) without overflow
fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `lambda/2 |w[1..]|^2` and its gradient.
/// `z` holds standardized rows, `y` is 1 for Pass and 0 for Fail.
pub fn objective(z: &[Vec<f64>], y: &[f64], w: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let n = z.len() as f64;
    let mut loss = 0.0;
    let mut g = vec![0.0; w.len()];
    for (zi, yi) in z.iter().zip(y) {
        let a = w[0] + zi.iter().zip(&w[1..]).map(|(v, c)| v * c).sum::<f64>();
        loss += softplus(a) - yi * a;
        let r = sigmoid(a) - yi;
        g[0] += r;
        for (gj, v) in g[1..].iter_mut().zip(zi) {
            *gj += r * v;
        }
    }
    loss /= n;
    g.iter_mut().for_each(|v| *v /= n);
    for j in 1..w.len() {
        loss += 0.5 * lambda * w[j] * w[j];
        g[j] += lambda * w[j];
    }
    (loss, g)
}

impl LogisticModel {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn predict(&self, x: &[f64]) -> Verdict {
        if self.probability(x) >= 0.5 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.coefficient_norm() > 0.0)
    }

    pub fn scaler(&self) -> &Standardizer {
        &self.scaler
    }

    pub fn standardized_weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn fit_logistic(x: &[Vec<f64>], labels: &[Verdict], params: &LogisticParams) -> Result<LogisticModel> {
    fit_logistic_warm(x, labels, params, None)
}

/// As [`fit_logistic`], starting from a previous model's coefficients.
pub fn fit_logistic_warm(
    x: &[Vec<f64>],
    labels: &[Verdict],
    params: &LogisticParams,
    warm: Option<&LogisticModel>,
) -> Result<LogisticModel> {
    let passes = labels.iter().filter(|&&v| v == Verdict::Pass).count();
    if passes == 0 || passes == labels.len() {
        return Err(Error::SingleClass);
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.transform_all(x);
    let y: Vec<f64> = labels
        .iter()
        .map(|&v| if v == Verdict::Pass { 1.0 } else { 0.0 })
        .collect();
    let p = scaler.mean.len();
    let mut w = vec![0.0; p + 1];
    if let Some(m) = warm.filter(|m| m.coefficients.len() == p) {
        w[0] = m.intercept
            + m.coefficients
                .iter()
                .zip(&scaler.mean)
                .map(|(c, mu)| c * mu)
                .sum::<f64>();
        for j in 0..p {
            w[j + 1] = m.coefficients[j] * scaler.scale[j];
        }
    }
    let (mut loss, mut g) = objective(&z, &y, &w, params.lambda);
    let mut history = vec![loss];
    let mut step = 1.0;
    let mut iters = 0;
    while iters < params.max_iters && g.iter().fold(0.0_f64, |m, v| m.max(v.abs())) >= params.tol {
        iters += 1;
        let gg: f64 = g.iter().map(|v| v * v).sum();
        step *= 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let (l2, g2) = objective(&z, &y, &cand, params.lambda);
            if l2 <= loss - 0.5 * step * gg {
                w = cand;
                loss = l2;
                g = g2;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(loss);
        if !accepted {
            break;
        }
    }
    let coefficients: Vec<f64> = (0..p).map(|j| w[j + 1] / scaler.scale[j]).collect();
    let intercept = w[0]
        - coefficients
            .iter()
            .zip(&scaler.mean)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    Ok(LogisticModel {
        intercept,
        coefficients,
        scaler,
        weights: w,
        iterations: iters,
        loss_history: history,
    })
}
