//! Epsilon-insensitive support vector regression, RBF kernel.
//!
//! The bias is absorbed into the kernel (`k + 1`), which turns the dual into
//! a box-constrained problem with an L1 term, solved by cyclic coordinate
//! descent. If the solver does not settle within `max_sweeps`, the model
//! falls back to kernel ridge regression with ridge `1/C`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scale::{Standardizer, TargetScaler};
use super::{HyperParams, ModelType, ParamGrid, Regressor, RegressorFactory};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    /// Multiplied by 1/p for p input columns.
    pub gamma: f64,
    /// In units of the standardized target.
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Relative dual objective decrease per sweep that counts as converged.
    pub tol: f64,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 10.0,
            gamma: 1.0,
            epsilon: 0.05,
            max_sweeps: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svr {
    scaler: Standardizer,
    target: TargetScaler,
    gamma: f64,
    support: Vec<Vec<f64>>,
    coef: Vec<f64>,
    /// True when the dual solver did not converge and kernel ridge was used.
    pub fallback: bool,
}

fn kernel(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-gamma * d).exp() + 1.0
}

impl Svr {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<Self> {
        let scaler = Standardizer::fit(x);
        let target = TargetScaler::fit(y);
        let z = scaler.transform_all(x);
        let t: Vec<f64> = y.iter().map(|&v| target.forward(v)).collect();
        let n = z.len();
        let p = z.first().map_or(1, Vec::len).max(1);
        let gamma = params.gamma / p as f64;
        let q = DMatrix::from_fn(n, n, |i, j| kernel(gamma, &z[i], &z[j]));

        let mut beta = vec![0.0; n];
        let mut f = vec![0.0; n];
        let objective = |beta: &[f64], f: &[f64]| -> f64 {
            beta.iter()
                .zip(f)
                .zip(&t)
                .map(|((b, fi), ti)| 0.5 * b * fi - ti * b + params.epsilon * b.abs())
                .sum()
        };
        let mut obj = 0.0;
        let mut converged = n == 0;
        for _ in 0..params.max_sweeps {
            for i in 0..n {
                let qii = q[(i, i)];
                let g = f[i] - t[i];
                let u = beta[i] - g / qii;
                let thr = params.epsilon / qii;
                let soft = u.signum() * (u.abs() - thr).max(0.0);
                let nb = soft.clamp(-params.c, params.c);
                let d = nb - beta[i];
                if d != 0.0 {
                    for (k, fk) in f.iter_mut().enumerate() {
                        *fk += d * q[(k, i)];
                    }
                    beta[i] = nb;
                }
            }
            let new_obj = objective(&beta, &f);
            let drop = obj - new_obj;
            obj = new_obj;
            if drop <= params.tol * obj.abs().max(1e-3) {
                converged = true;
                break;
            }
        }
        let fallback = !converged;
        if fallback {
            let mut a = q.clone();
            for i in 0..n {
                a[(i, i)] += 1.0 / params.c;
            }
            let ch = a
                .cholesky()
                .ok_or_else(|| Error::Numerical("kernel ridge system not positive definite".into()))?;
            beta = ch.solve(&DVector::from_column_slice(&t)).iter().copied().collect();
        }
        let (support, coef): (Vec<Vec<f64>>, Vec<f64>) = z
            .into_iter()
            .zip(beta)
            .filter(|(_, b)| *b != 0.0)
            .unzip();
        Ok(Self {
            scaler,
            target,
            gamma,
            support,
            coef,
            fallback,
        })
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }
}

impl Regressor for Svr {
    fn predict(&self, x: &[f64]) -> f64 {
        let z = self.scaler.transform(x);
        let s: f64 = self
            .support
            .iter()
            .zip(&self.coef)
            .map(|(sv, b)| b * kernel(self.gamma, sv, &z))
            .sum();
        self.target.inverse(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SvrFactory;

impl RegressorFactory for SvrFactory {
    fn model_type(&self) -> ModelType {
        ModelType::SVR
    }
    fn default_params(&self) -> HyperParams {
        let d = SvrParams::default();
        HyperParams::new()
            .with("c", d.c)
            .with("gamma", d.gamma)
            .with("epsilon", d.epsilon)
    }
    fn grid(&self) -> ParamGrid {
        ParamGrid::from([
            ("c".into(), vec![1.0, 10.0, 100.0]),
            ("gamma".into(), vec![0.3, 1.0, 3.0, 10.0]),
            ("epsilon".into(), vec![0.01, 0.05, 0.1]),
        ])
    }
    fn fit(&self, x: &[Vec<f64>], y: &[f64], hp: &HyperParams, _rng: &mut Rng) -> Result<Arc<dyn Regressor>> {
        let d = SvrParams::default();
        let p = SvrParams {
            c: hp.get_or("c", d.c),
            gamma: hp.get_or("gamma", d.gamma),
            epsilon: hp.get_or("epsilon", d.epsilon),
            ..d
        };
        Ok(Arc::new(Svr::fit(x, y, &p)?))
    }
}
