//! Single-hidden-layer perceptron regressor.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::scale::{Standardizer, TargetScaler};
use super::{HyperParams, ModelType, ParamGrid, Regressor, RegressorFactory};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 16,
            learning_rate: 0.05,
            epochs: 200,
            batch: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Weights {
    /// hidden x inputs
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Weights {
    fn forward(&self, z: &[f64], h: &mut [f64]) -> f64 {
        for (k, hk) in h.iter_mut().enumerate() {
            let a: f64 = self.w1[k].iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + self.b1[k];
            *hk = a.tanh();
        }
        self.w2.iter().zip(h.iter()).map(|(w, v)| w * v).sum::<f64>() + self.b2
    }

    fn mse(&self, z: &[Vec<f64>], t: &[f64]) -> f64 {
        let mut h = vec![0.0; self.b1.len()];
        z.iter()
            .zip(t)
            .map(|(zi, ti)| (self.forward(zi, &mut h) - ti).powi(2))
            .sum::<f64>()
            / z.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    scaler: Standardizer,
    target: TargetScaler,
    weights: Weights,
    /// Training MSE (scaled target) after initialization and each epoch.
    pub loss_history: Vec<f64>,
}

impl Mlp {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &MlpParams, rng: &mut Rng) -> Self {
        let scaler = Standardizer::fit(x);
        let target = TargetScaler::fit(y);
        let z = scaler.transform_all(x);
        let t: Vec<f64> = y.iter().map(|&v| target.forward(v)).collect();
        let p = z.first().map_or(0, Vec::len);
        let hdim = params.hidden.max(1);
        let r1 = (6.0 / (p + hdim) as f64).sqrt();
        let r2 = (6.0 / (hdim + 1) as f64).sqrt();
        let mut w = Weights {
            w1: (0..hdim)
                .map(|_| (0..p).map(|_| rng.gen_range(-r1..r1)).collect())
                .collect(),
            b1: vec![0.0; hdim],
            w2: (0..hdim).map(|_| rng.gen_range(-r2..r2)).collect(),
            b2: 0.0,
        };
        let mut lr = params.learning_rate;
        let mut loss = w.mse(&z, &t);
        let mut history = vec![loss];
        let mut order: Vec<usize> = (0..z.len()).collect();
        let mut h = vec![0.0; hdim];
        let batch = params.batch.max(1);
        for _ in 0..params.epochs {
            let saved = w.clone();
            order.shuffle(rng);
            for chunk in order.chunks(batch) {
                let mut g1 = vec![vec![0.0; p]; hdim];
                let mut gb1 = vec![0.0; hdim];
                let mut g2 = vec![0.0; hdim];
                let mut gb2 = 0.0;
                for &i in chunk {
                    let out = w.forward(&z[i], &mut h);
                    let d = 2.0 * (out - t[i]);
                    gb2 += d;
                    for k in 0..hdim {
                        g2[k] += d * h[k];
                        let dk = d * w.w2[k] * (1.0 - h[k] * h[k]);
                        gb1[k] += dk;
                        for (g, v) in g1[k].iter_mut().zip(&z[i]) {
                            *g += dk * v;
                        }
                    }
                }
                let s = lr / chunk.len() as f64;
                w.b2 -= s * gb2;
                for k in 0..hdim {
                    w.w2[k] -= s * g2[k];
                    w.b1[k] -= s * gb1[k];
                    for (wv, g) in w.w1[k].iter_mut().zip(&g1[k]) {
                        *wv -= s * g;
                    }
                }
            }
            let new_loss = w.mse(&z, &t);
            if new_loss.is_finite() && new_loss <= loss {
                loss = new_loss;
            } else {
                w = saved;
                lr *= 0.5;
            }
            history.push(loss);
        }
        Self {
            scaler,
            target,
            weights: w,
            loss_history: history,
        }
    }
}

impl Regressor for Mlp {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut h = vec![0.0; self.weights.b1.len()];
        self.target
            .inverse(self.weights.forward(&self.scaler.transform(x), &mut h))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MlpFactory;

impl RegressorFactory for MlpFactory {
    fn model_type(&self) -> ModelType {
        ModelType::NN
    }
    fn default_params(&self) -> HyperParams {
        let d = MlpParams::default();
        HyperParams::new()
            .with("hidden", d.hidden as f64)
            .with("learning_rate", d.learning_rate)
            .with("epochs", d.epochs as f64)
            .with("batch", d.batch as f64)
    }
    fn grid(&self) -> ParamGrid {
        ParamGrid::from([
            ("hidden".into(), vec![8.0, 16.0, 32.0, 64.0]),
            ("learning_rate".into(), vec![0.01, 0.03, 0.1]),
            ("epochs".into(), vec![100.0, 200.0, 400.0]),
        ])
    }
    fn fit(&self, x: &[Vec<f64>], y: &[f64], hp: &HyperParams, rng: &mut Rng) -> Result<Arc<dyn Regressor>> {
        let d = MlpParams::default();
        let p = MlpParams {
            hidden: hp.usize_or("hidden", d.hidden),
            learning_rate: hp.get_or("learning_rate", d.learning_rate),
            epochs: hp.usize_or("epochs", d.epochs),
            batch: hp.usize_or("batch", d.batch),
        };
        Ok(Arc::new(Mlp::fit(x, y, &p, rng)))
    }
}
