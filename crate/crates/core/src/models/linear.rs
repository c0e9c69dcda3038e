//! Linear and polynomial least squares.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scale::Standardizer;
use super::{HyperParams, ModelType, ParamGrid, Regressor, RegressorFactory};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Solution of a (possibly regularized) least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub intercept: f64,
    pub weights: Vec<f64>,
    /// Penalty actually applied; larger than requested after a singular solve.
    pub lambda: f64,
}

/// Minimizes `|y - b - Zw|^2 + lambda |w|^2`; the intercept is unpenalized.
/// Escalates `lambda` when the normal equations are (numerically) singular.
pub fn solve_ridge(z: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<RidgeSolution> {
    let n = z.len();
    let p = z.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { z[i][j - 1] });
    let yv = DVector::from_column_slice(y);
    let gram = a.transpose() * &a;
    let rhs = a.transpose() * yv;
    let diag_max = (0..=p).map(|i| gram[(i, i)]).fold(1.0_f64, f64::max);
    let mut lam = lambda.max(0.0);
    for _ in 0..40 {
        let mut g = gram.clone();
        for i in 1..=p {
            g[(i, i)] += lam;
        }
        if let Some(ch) = g.clone().cholesky() {
            let l = ch.l();
            let min_piv = (0..=p).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_piv > 1e-11 * diag_max {
                let sol = ch.solve(&rhs);
                if sol.iter().all(|v| v.is_finite()) {
                    return Ok(RidgeSolution {
                        intercept: sol[0],
                        weights: sol.iter().skip(1).copied().collect(),
                        lambda: lam,
                    });
                }
            }
        }
        lam = if lam == 0.0 { 1e-10 * diag_max } else { lam * 10.0 };
    }
    Err(Error::Numerical("least-squares system could not be regularized".into()))
}

/// `y = intercept + coefficients . x` on raw encoded features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
}

impl LinearModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Self> {
        let s = Standardizer::fit(x);
        let sol = solve_ridge(&s.transform_all(x), y, lambda)?;
        let coefficients: Vec<f64> = sol.weights.iter().zip(&s.scale).map(|(w, sc)| w / sc).collect();
        let intercept = sol.intercept - coefficients.iter().zip(&s.mean).map(|(c, m)| c * m).sum::<f64>();
        Ok(Self {
            intercept,
            coefficients,
            lambda: sol.lambda,
        })
    }
}

impl Regressor for LinearModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearFactory;

impl RegressorFactory for LinearFactory {
    fn model_type(&self) -> ModelType {
        ModelType::GL
    }
    fn default_params(&self) -> HyperParams {
        HyperParams::new().with("lambda", 0.0)
    }
    fn grid(&self) -> ParamGrid {
        ParamGrid::from([("lambda".into(), vec![0.0, 1e-4, 1e-2, 1.0, 10.0])])
    }
    fn fit(&self, x: &[Vec<f64>], y: &[f64], hp: &HyperParams, _rng: &mut Rng) -> Result<Arc<dyn Regressor>> {
        Ok(Arc::new(LinearModel::fit(x, y, hp.get_or("lambda", 0.0))?))
    }
}

/// Exponent tuples of all monomials of total degree 1..=degree, graded order.
pub fn monomials(p: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, p: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for j in start..p {
            cur.push(j);
            rec(j, p, left - 1, cur, out);
            cur.pop();
        }
    }
    for d in 1..=degree {
        rec(0, p, d, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialModel {
    pub degree: usize,
    scaler: Standardizer,
    terms: Vec<Vec<usize>>,
    intercept: f64,
    weights: Vec<f64>,
}

impl PolynomialModel {
    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.transform(x);
        self.terms.iter().map(|t| t.iter().map(|&j| z[j]).product()).collect()
    }

    pub fn fit(x: &[Vec<f64>], y: &[f64], degree: usize, lambda: f64) -> Result<Self> {
        let p = x.first().map_or(0, Vec::len);
        let mut m = Self {
            degree,
            scaler: Standardizer::fit(x),
            terms: monomials(p, degree.max(1)),
            intercept: 0.0,
            weights: Vec::new(),
        };
        let feats: Vec<Vec<f64>> = x.iter().map(|r| m.expand(r)).collect();
        let sol = solve_ridge(&feats, y, lambda)?;
        m.intercept = sol.intercept;
        m.weights = sol.weights;
        Ok(m)
    }
}

impl Regressor for PolynomialModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.expand(x).iter().zip(&self.weights).map(|(f, w)| f * w).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PolynomialFactory;

impl RegressorFactory for PolynomialFactory {
    fn model_type(&self) -> ModelType {
        ModelType::GNL
    }
    fn default_params(&self) -> HyperParams {
        HyperParams::new().with("degree", 2.0).with("lambda", 1e-4)
    }
    fn grid(&self) -> ParamGrid {
        ParamGrid::from([
            ("degree".into(), vec![2.0, 3.0]),
            ("lambda".into(), vec![1e-6, 1e-4, 1e-2, 1.0]),
        ])
    }
    fn fit(&self, x: &[Vec<f64>], y: &[f64], hp: &HyperParams, _rng: &mut Rng) -> Result<Arc<dyn Regressor>> {
        Ok(Arc::new(PolynomialModel::fit(
            x,
            y,
            hp.usize_or("degree", 2).clamp(1, 3),
            hp.get_or("lambda", 1e-4),
        )?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 * 0.1]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 3.0).collect();
        let m = LinearModel::fit(&x, &y, 0.0).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-6);
        assert!((m.intercept - 3.0).abs() < 1e-6);
        assert!((m.predict(&[1.0]) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_falls_back_to_ridge() {
        // second column duplicates the first
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] + 1.0).collect();
        let m = LinearModel::fit(&x, &y, 0.0).unwrap();
        assert!(m.lambda > 0.0);
        assert!((m.predict(&[7.0, 7.0]) - 8.0).abs() < 1e-4);
    }

    #[test]
    fn polynomial_fits_quadratic() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.2 - 5.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[0] - 2.0 * r[0] + 1.0).collect();
        let m = PolynomialModel::fit(&x, &y, 2, 0.0).unwrap();
        assert!((m.predict(&[3.0]) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn monomial_count() {
        // C(p+d, d) - 1
        assert_eq!(monomials(3, 2).len(), 9);
        assert_eq!(monomials(8, 3).len(), 164);
    }
}
