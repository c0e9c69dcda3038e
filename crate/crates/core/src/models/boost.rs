//! Least-squares boosting of regression stumps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tree::{fit_regression, RegressionTree, TreeParams};
use super::{HyperParams, ModelType, ParamGrid, Regressor, RegressorFactory};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedStumps {
    pub init: f64,
    pub learning_rate: f64,
    pub stumps: Vec<RegressionTree>,
}

impl BoostedStumps {
    pub fn fit(x: &[Vec<f64>], y: &[f64], rounds: usize, learning_rate: f64) -> Self {
        let init = y.iter().sum::<f64>() / y.len() as f64;
        let mut pred = vec![init; y.len()];
        let params = TreeParams {
            max_depth: 1,
            min_leaf: 1,
            max_features: None,
        };
        let mut stumps = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
            let s = fit_regression(x, &resid, &params, None);
            if s.n_leaves() == 1 {
                break;
            }
            for (p, xi) in pred.iter_mut().zip(x) {
                *p += learning_rate * s.predict(xi);
            }
            stumps.push(s);
        }
        Self {
            init,
            learning_rate,
            stumps,
        }
    }
}

impl Regressor for BoostedStumps {
    fn predict(&self, x: &[f64]) -> f64 {
        self.init + self.learning_rate * self.stumps.iter().map(|s| *s.predict(x)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoostingFactory;

impl RegressorFactory for BoostingFactory {
    fn model_type(&self) -> ModelType {
        ModelType::LSB
    }
    fn default_params(&self) -> HyperParams {
        HyperParams::new().with("rounds", 100.0).with("learning_rate", 0.1)
    }
    fn grid(&self) -> ParamGrid {
        ParamGrid::from([
            ("rounds".into(), vec![50.0, 100.0, 200.0, 400.0]),
            ("learning_rate".into(), vec![0.05, 0.1, 0.2, 0.4]),
        ])
    }
    fn fit(&self, x: &[Vec<f64>], y: &[f64], hp: &HyperParams, _rng: &mut Rng) -> Result<Arc<dyn Regressor>> {
        Ok(Arc::new(BoostedStumps::fit(
            x,
            y,
            hp.usize_or("rounds", 100),
            hp.get_or("learning_rate", 0.1),
        )))
    }
}
