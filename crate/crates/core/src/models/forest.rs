//! Random forest of regression trees.

use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{fit_regression, RegressionTree, TreeParams};
use super::{HyperParams, ModelType, ParamGrid, Regressor, RegressorFactory};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Fraction of features tried per split.
    pub feature_fraction: f64,
}

impl Forest {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams, rng: &mut Rng) -> Self {
        let n = x.len();
        let p = x.first().map_or(0, Vec::len);
        let k = ((p as f64 * params.feature_fraction).ceil() as usize).clamp(1, p.max(1));
        let tp = TreeParams {
            max_features: Some(k),
            ..params.tree
        };
        let trees = (0..params.n_trees.max(1))
            .map(|_| {
                let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let bx: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
                let by: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                fit_regression(&bx, &by, &tp, Some(rng))
            })
            .collect();
        Self { trees }
    }
}

impl Regressor for Forest {
    fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| *t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForestFactory;

impl RegressorFactory for ForestFactory {
    fn model_type(&self) -> ModelType {
        ModelType::RF
    }
    fn default_params(&self) -> HyperParams {
        HyperParams::new()
            .with("n_trees", 50.0)
            .with("max_depth", 10.0)
            .with("min_leaf", 1.0)
            .with("feature_fraction", 0.6)
    }
    fn grid(&self) -> ParamGrid {
        ParamGrid::from([
            ("n_trees".into(), vec![10.0, 25.0, 50.0, 100.0]),
            ("max_depth".into(), vec![4.0, 6.0, 8.0, 12.0]),
            ("min_leaf".into(), vec![1.0, 3.0]),
            ("feature_fraction".into(), vec![0.33, 0.6, 1.0]),
        ])
    }
    fn fit(&self, x: &[Vec<f64>], y: &[f64], hp: &HyperParams, rng: &mut Rng) -> Result<Arc<dyn Regressor>> {
        let params = ForestParams {
            n_trees: hp.usize_or("n_trees", 50),
            tree: TreeParams {
                max_depth: hp.usize_or("max_depth", 10),
                min_leaf: hp.usize_or("min_leaf", 1).max(1),
                max_features: None,
            },
            feature_fraction: hp.get_or("feature_fraction", 0.6).clamp(0.01, 1.0),
        };
        Ok(Arc::new(Forest::fit(x, y, &params, rng)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn forest_averages_close_to_step() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 10.0, (i % 7) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| if r[0] < 10.0 { 1.0 } else { -1.0 }).collect();
        let p = ForestParams {
            n_trees: 20,
            tree: TreeParams::default(),
            feature_fraction: 1.0,
        };
        let f = Forest::fit(&x, &y, &p, &mut stream(4, "rf"));
        assert!((f.predict(&[3.0, 1.0]) - 1.0).abs() < 0.1);
        assert!((f.predict(&[17.0, 1.0]) + 1.0).abs() < 0.1);
    }
}
