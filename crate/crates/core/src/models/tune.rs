//! Hyperparameter search with k-fold cross-validated MAE.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{HyperParams, ParamGrid, RegressorFactory, MIN_TRAIN_ROWS};
use crate::error::{Error, Result};
use crate::rng::{stream, Rng};
use crate::space::{Encoder, Fitness, LabeledDataset, Verdict};

pub const CV_FOLDS: usize = 3;

/// Every combination of grid values, keys in sorted order, last key fastest.
pub fn grid_points(grid: &ParamGrid) -> Vec<HyperParams> {
    let mut out = vec![HyperParams::new()];
    for (k, vals) in grid {
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for base in &out {
            for v in vals {
                next.push(base.clone().with(k, *v));
            }
        }
        out = next;
    }
    out
}

pub trait Tuner: Send + Sync {
    fn name(&self) -> &'static str;
    /// Evaluates at most `trials` grid points and returns the best one
    /// with its score (lower is better). The first point wins ties.
    fn search(
        &self,
        points: &[HyperParams],
        trials: usize,
        score: &mut dyn FnMut(&HyperParams) -> f64,
        rng: &mut Rng,
    ) -> (HyperParams, f64);
}

fn keep_best(best: &mut Option<(HyperParams, f64)>, hp: &HyperParams, s: f64) {
    let better = match best {
        None => true,
        Some((_, b)) => s < *b,
    };
    if better {
        *best = Some((hp.clone(), s));
    }
}

/// Uniform sampling of grid points without replacement.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSearch;

impl Tuner for RandomSearch {
    fn name(&self) -> &'static str {
        "random"
    }
    fn search(
        &self,
        points: &[HyperParams],
        trials: usize,
        score: &mut dyn FnMut(&HyperParams) -> f64,
        rng: &mut Rng,
    ) -> (HyperParams, f64) {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(rng);
        let mut best = None;
        for &i in order.iter().take(trials.max(1)) {
            let s = score(&points[i]);
            keep_best(&mut best, &points[i], s);
        }
        best.expect("at least one trial")
    }
}

/// Expected improvement over a Gaussian-process model of the score on
/// grid coordinates scaled to [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct ExpectedImprovement {
    pub initial: usize,
    pub length_scale: f64,
}

impl Default for ExpectedImprovement {
    fn default() -> Self {
        Self {
            initial: 3,
            length_scale: 0.3,
        }
    }
}

fn coords(points: &[HyperParams]) -> Vec<Vec<f64>> {
    let keys: Vec<&String> = points.first().map_or(Vec::new(), |p| p.0.keys().collect());
    let ranges: Vec<(f64, f64)> = keys
        .iter()
        .map(|k| {
            points.iter().map(|p| p.0[*k]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
        })
        .collect();
    points
        .iter()
        .map(|p| {
            keys.iter()
                .zip(&ranges)
                .map(|(k, (lo, hi))| if hi > lo { (p.0[*k] - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect()
}

impl Tuner for ExpectedImprovement {
    fn name(&self) -> &'static str {
        "expected_improvement"
    }
    fn search(
        &self,
        points: &[HyperParams],
        trials: usize,
        score: &mut dyn FnMut(&HyperParams) -> f64,
        rng: &mut Rng,
    ) -> (HyperParams, f64) {
        let xs = coords(points);
        let k = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
            (-d / (2.0 * self.length_scale * self.length_scale)).exp()
        };
        let trials = trials.max(1).min(points.len());
        let mut seen: Vec<usize> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let mut best = None;
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(rng);
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        while seen.len() < trials {
            let pick = if seen.len() < self.initial.max(1) {
                *order.iter().find(|i| !seen.contains(i)).expect("unseen point")
            } else {
                let finite: Vec<f64> = ys.iter().copied().filter(|v| v.is_finite()).collect();
                let (mu, sd) = if finite.is_empty() {
                    (0.0, 1.0)
                } else {
                    let m = finite.iter().sum::<f64>() / finite.len() as f64;
                    let s = (finite.iter().map(|v| (v - m).powi(2)).sum::<f64>() / finite.len() as f64).sqrt();
                    (m, if s > 0.0 { s } else { 1.0 })
                };
                let cap = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let t: Vec<f64> = ys
                    .iter()
                    .map(|&v| (if v.is_finite() { v } else { cap.max(mu) } - mu) / sd)
                    .collect();
                let n = seen.len();
                let gram = DMatrix::from_fn(n, n, |i, j| {
                    k(&xs[seen[i]], &xs[seen[j]]) + if i == j { 1e-6 } else { 0.0 }
                });
                let Some(ch) = gram.cholesky() else { break };
                let alpha = ch.solve(&DVector::from_column_slice(&t));
                let y_best = t.iter().copied().fold(f64::INFINITY, f64::min);
                let mut best_ei = f64::NEG_INFINITY;
                let mut pick = usize::MAX;
                for &i in &order {
                    if seen.contains(&i) {
                        continue;
                    }
                    let kv = DVector::from_iterator(n, seen.iter().map(|&j| k(&xs[i], &xs[j])));
                    let m = kv.dot(&alpha);
                    let v = (1.0 - kv.dot(&ch.solve(&kv))).max(1e-12);
                    let s = v.sqrt();
                    let zz = (y_best - m) / s;
                    let ei = (y_best - m) * normal.cdf(zz) + s * normal.pdf(zz);
                    if ei > best_ei {
                        best_ei = ei;
                        pick = i;
                    }
                }
                pick
            };
            let s = score(&points[pick]);
            keep_best(&mut best, &points[pick], s);
            seen.push(pick);
            ys.push(s);
        }
        best.expect("at least one trial")
    }
}

/// Stratified k-fold assignment; fold `f` holds the returned indices.
pub fn cv_folds(labels: &[Verdict], k: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for class in [Verdict::Pass, Verdict::Fail] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

/// Mean absolute error over the folds; infinite if any fit fails.
pub fn cross_val_mae(
    factory: &dyn RegressorFactory,
    x: &[Vec<f64>],
    y: &[f64],
    hp: &HyperParams,
    folds: &[Vec<usize>],
    seed: u64,
) -> f64 {
    let mut err = 0.0;
    let mut count = 0usize;
    for (f, test) in folds.iter().enumerate() {
        if test.is_empty() {
            continue;
        }
        let train: Vec<usize> = (0..x.len()).filter(|i| test.binary_search(i).is_err()).collect();
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let mut rng = stream(seed, &format!("cv-{f}"));
        match factory.fit(&tx, &ty, hp, &mut rng) {
            Ok(m) => {
                for &i in test {
                    err += (m.predict(&x[i]) - y[i]).abs();
                    count += 1;
                }
            }
            Err(_) => return f64::INFINITY,
        }
    }
    let mae = err / count.max(1) as f64;
    if mae.is_finite() {
        mae
    } else {
        f64::INFINITY
    }
}

/// Returns the best parameters (merged over the factory defaults) and
/// their CV score.
pub fn tune_with(
    factory: &dyn RegressorFactory,
    grid: &ParamGrid,
    tuner: &dyn Tuner,
    ds: &LabeledDataset,
    trials: usize,
    rng: &mut Rng,
) -> Result<(HyperParams, f64)> {
    if trials == 0 {
        return Err(Error::Config("tuning needs at least one trial".into()));
    }
    if ds.len() < MIN_TRAIN_ROWS {
        return Err(Error::DatasetTooSmall {
            have: ds.len(),
            need: MIN_TRAIN_ROWS,
        });
    }
    let enc = Encoder::new(ds.space());
    let x: Vec<Vec<f64>> = ds.rows().iter().map(|r| enc.encode(&r.input)).collect();
    let y: Vec<f64> = ds.rows().iter().map(|r| r.fitness.0).collect();
    let labels: Vec<Verdict> = y.iter().map(|&v| Fitness(v).verdict()).collect();
    let folds = cv_folds(&labels, CV_FOLDS, rng);
    let seed = rng.next_u64();
    let defaults = factory.default_params();
    let points: Vec<HyperParams> = grid_points(grid).iter().map(|p| p.over(&defaults)).collect();
    let mut score = |hp: &HyperParams| cross_val_mae(factory, &x, &y, hp, &folds, seed);
    let _ = rng.gen::<u8>();
    Ok(tuner.search(&points, trials, &mut score, rng))
}
