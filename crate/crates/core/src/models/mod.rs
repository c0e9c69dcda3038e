//! Fitness regressors, the classification tree and logistic regression.
//!
//! Seven surrogate regressor types sit behind [`RegressorFactory`] and are
//! looked up by [`ModelType`] in a [`ModelRegistry`]:
//!
//! * `GL`  linear least squares on standardized inputs, ridge fallback when
//!   the normal equations are singular.
//! * `GNL` polynomial least squares (degree 2 by default, tunable to 3).
//! * `LSB` gradient boosting of depth-1 regression stumps, squared loss.
//! * `RT`  regression tree (squared error).
//! * `NN`  one hidden tanh layer trained by mini-batch gradient descent.
//! * `RF`  bagged regression trees with per-split feature subsampling.
//! * `SVR` epsilon-insensitive SVR with an RBF kernel solved by dual
//!   coordinate descent; kernel ridge regression when the solver does not
//!   converge within its sweep limit.
//!
//! All models see the same encoding: real variables verbatim, enumerated
//! variables one-hot. Predictions are clipped to the subject's fitness range
//! when one is supplied.

pub mod boost;
pub mod forest;
pub mod linear;
pub mod logistic;
pub mod nn;
pub mod scale;
pub mod svr;
pub mod tree;
pub mod tune;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::space::{Encoder, Fitness, FitnessRange, InputSpace, LabeledDataset, TestInput, Verdict};

pub use logistic::{fit_logistic, LogisticModel, LogisticParams};
pub use tree::{ClassTree, ClassWeight, RegressionTree, TreeParams};
pub use tune::{ExpectedImprovement, RandomSearch, Tuner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelType {
    GL,
    GNL,
    LSB,
    RT,
    NN,
    RF,
    SVR,
    ClassTree,
    LogReg,
}

impl ModelType {
    pub const SURROGATES: [ModelType; 7] = [
        ModelType::GL,
        ModelType::GNL,
        ModelType::LSB,
        ModelType::RT,
        ModelType::NN,
        ModelType::RF,
        ModelType::SVR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelType::GL => "GL",
            ModelType::GNL => "GNL",
            ModelType::LSB => "LSB",
            ModelType::RT => "RT",
            ModelType::NN => "NN",
            ModelType::RF => "RF",
            ModelType::SVR => "SVR",
            ModelType::ClassTree => "ClassTree",
            ModelType::LogReg => "LogReg",
        }
    }

    pub fn is_regressor(self) -> bool {
        Self::SURROGATES.contains(&self)
    }
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::SURROGATES
            .iter()
            .chain(&[ModelType::ClassTree, ModelType::LogReg])
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                kind: "model type",
                name: s.to_string(),
            })
    }
}

/// Named numeric hyperparameters; integers are stored as whole floats.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperParams(pub BTreeMap<String, f64>);

impl HyperParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> usize {
        self.get(key).map_or(default, |v| v.max(0.0).round() as usize)
    }

    /// `self` overriding `base`.
    pub fn over(&self, base: &HyperParams) -> HyperParams {
        let mut m = base.0.clone();
        m.extend(self.0.iter().map(|(k, v)| (k.clone(), *v)));
        HyperParams(m)
    }
}

/// Per-parameter candidate values; the search space is their product.
pub type ParamGrid = BTreeMap<String, Vec<f64>>;

pub trait Regressor: Send + Sync + fmt::Debug {
    fn predict(&self, x: &[f64]) -> f64;
}

pub trait RegressorFactory: Send + Sync {
    fn model_type(&self) -> ModelType;
    fn default_params(&self) -> HyperParams;
    fn grid(&self) -> ParamGrid;
    fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[f64],
        params: &HyperParams,
        rng: &mut Rng,
    ) -> Result<Arc<dyn Regressor>>;
}

#[derive(Clone, Default)]
pub struct ModelRegistry {
    factories: BTreeMap<ModelType, Arc<dyn RegressorFactory>>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(linear::LinearFactory));
        r.register(Arc::new(linear::PolynomialFactory));
        r.register(Arc::new(boost::BoostingFactory));
        r.register(Arc::new(TreeFactory));
        r.register(Arc::new(nn::MlpFactory));
        r.register(Arc::new(forest::ForestFactory));
        r.register(Arc::new(svr::SvrFactory));
        r
    }

    pub fn register(&mut self, f: Arc<dyn RegressorFactory>) {
        self.factories.insert(f.model_type(), f);
    }

    pub fn get(&self, t: ModelType) -> Result<&Arc<dyn RegressorFactory>> {
        self.factories.get(&t).ok_or_else(|| Error::Unknown {
            kind: "regressor",
            name: t.name().to_string(),
        })
    }

    pub fn types(&self) -> Vec<ModelType> {
        self.factories.keys().copied().collect()
    }
}

impl fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

pub fn registry() -> &'static ModelRegistry {
    static REG: OnceLock<ModelRegistry> = OnceLock::new();
    REG.get_or_init(ModelRegistry::builtin)
}

/// Minimum rows for a training call.
pub const MIN_TRAIN_ROWS: usize = 10;

#[derive(Debug, Clone)]
pub struct TrainOptions {
    /// Fraction of rows used for fitting; the rest estimate the error.
    pub split: f64,
    /// Overrides on top of the factory defaults.
    pub params: HyperParams,
    pub clip: Option<FitnessRange>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            split: 0.8,
            params: HyperParams::new(),
            clip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_type: ModelType,
    pub hyperparams: HyperParams,
    pub holdout_mae: f64,
}

/// A fitted surrogate bound to the input space it was trained on.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    model_type: ModelType,
    hyperparams: HyperParams,
    holdout_mae: f64,
    space: InputSpace,
    encoder: Encoder,
    clip: Option<FitnessRange>,
    regressor: Arc<dyn Regressor>,
}

impl TrainedModel {
    /// Wrap an arbitrary regressor, e.g. a fixed stub with a known error.
    pub fn from_parts(
        model_type: ModelType,
        space: InputSpace,
        regressor: Arc<dyn Regressor>,
        holdout_mae: f64,
        clip: Option<FitnessRange>,
    ) -> Self {
        Self {
            model_type,
            hyperparams: HyperParams::new(),
            holdout_mae,
            encoder: Encoder::new(&space),
            space,
            clip,
            regressor,
        }
    }

    pub fn model_type(&self) -> ModelType {
        self.model_type
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hyperparams
    }

    pub fn holdout_mae(&self) -> f64 {
        self.holdout_mae
    }

    pub fn regressor(&self) -> &Arc<dyn Regressor> {
        &self.regressor
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            model_type: self.model_type,
            hyperparams: self.hyperparams.clone(),
            holdout_mae: self.holdout_mae,
        }
    }

    pub fn predict(&self, t: &TestInput) -> Result<Fitness> {
        if t.len() != self.space.len() {
            return Err(Error::SpaceMismatch(format!(
                "input has {} values, model expects {}",
                t.len(),
                self.space.len()
            )));
        }
        self.space
            .check(t)
            .map_err(|e| Error::SpaceMismatch(e.to_string()))?;
        let raw = self.regressor.predict(&self.encoder.encode(t));
        Ok(Fitness(self.clip_value(raw)))
    }

    fn clip_value(&self, v: f64) -> f64 {
        let v = if v.is_finite() { v } else { 0.0 };
        match &self.clip {
            Some(r) => r.clip(v),
            None => v,
        }
    }
}

pub fn predict(m: &TrainedModel, t: &TestInput) -> Result<Fitness> {
    m.predict(t)
}

/// Row indices split into (fit, holdout), stratified by verdict.
pub fn stratified_split(labels: &[Verdict], ratio: f64, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut fit = Vec::new();
    let mut hold = Vec::new();
    for class in [Verdict::Pass, Verdict::Fail] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let n_fit = ((idx.len() as f64) * ratio).round() as usize;
        fit.extend_from_slice(&idx[..n_fit]);
        hold.extend_from_slice(&idx[n_fit..]);
    }
    // Guarantee both parts are non-empty.
    if hold.is_empty() && fit.len() > 1 {
        hold.push(fit.pop().expect("non-empty"));
    }
    if fit.is_empty() && hold.len() > 1 {
        fit.push(hold.pop().expect("non-empty"));
    }
    fit.sort_unstable();
    hold.sort_unstable();
    (fit, hold)
}

fn xy(ds: &LabeledDataset, enc: &Encoder) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = ds.rows().iter().map(|r| enc.encode(&r.input)).collect();
    let y = ds.rows().iter().map(|r| r.fitness.0).collect();
    (x, y)
}

pub fn train(t: ModelType, ds: &LabeledDataset, opts: &TrainOptions, rng: &mut Rng) -> Result<TrainedModel> {
    train_with(registry().get(t)?.as_ref(), ds, opts, rng)
}

pub fn train_with(
    factory: &dyn RegressorFactory,
    ds: &LabeledDataset,
    opts: &TrainOptions,
    rng: &mut Rng,
) -> Result<TrainedModel> {
    if ds.len() < MIN_TRAIN_ROWS {
        return Err(Error::DatasetTooSmall {
            have: ds.len(),
            need: MIN_TRAIN_ROWS,
        });
    }
    if !(opts.split > 0.0 && opts.split < 1.0) {
        return Err(Error::Config(format!("split must be in (0,1), got {}", opts.split)));
    }
    let enc = Encoder::new(ds.space());
    let (x, y) = xy(ds, &enc);
    let labels: Vec<Verdict> = y.iter().map(|&f| Fitness(f).verdict()).collect();
    let (fit_idx, hold_idx) = stratified_split(&labels, opts.split, rng);
    let fx: Vec<Vec<f64>> = fit_idx.iter().map(|&i| x[i].clone()).collect();
    let fy: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
    let params = opts.params.over(&factory.default_params());
    let regressor = factory.fit(&fx, &fy, &params, rng)?;
    let mut model = TrainedModel {
        model_type: factory.model_type(),
        hyperparams: params,
        holdout_mae: 0.0,
        space: ds.space().clone(),
        encoder: enc,
        clip: opts.clip,
        regressor,
    };
    let mae = hold_idx
        .iter()
        .map(|&i| (model.clip_value(model.regressor.predict(&x[i])) - y[i]).abs())
        .sum::<f64>()
        / hold_idx.len() as f64;
    if !mae.is_finite() {
        return Err(Error::Numerical(format!("{} produced a non-finite holdout error", model.model_type)));
    }
    model.holdout_mae = mae;
    Ok(model)
}

/// Hyperparameters minimizing 3-fold CV MAE under the default random search.
pub fn tune(t: ModelType, ds: &LabeledDataset, trials: usize, rng: &mut Rng) -> Result<HyperParams> {
    let f = registry().get(t)?;
    tune::tune_with(f.as_ref(), &f.grid(), &RandomSearch, ds, trials, rng).map(|(hp, _)| hp)
}

fn tree_params(hp: &HyperParams) -> TreeParams {
    TreeParams {
        max_depth: hp.usize_or("max_depth", 8),
        min_leaf: hp.usize_or("min_leaf", 1).max(1),
        max_features: None,
    }
}

pub fn fit_regression_tree(ds: &LabeledDataset, hp: &HyperParams) -> Result<RegressionTree> {
    if ds.len() < 2 {
        return Err(Error::DatasetTooSmall {
            have: ds.len(),
            need: 2,
        });
    }
    let enc = Encoder::new(ds.space());
    let (x, y) = xy(ds, &enc);
    Ok(tree::fit_regression(&x, &y, &tree_params(hp), None))
}

/// Class tree hyperparameters: `max_depth`, `min_leaf`, and
/// `fail_weight`/`pass_weight` (balanced weights when both are absent).
pub fn fit_class_tree(ds: &LabeledDataset, hp: &HyperParams) -> Result<ClassTree> {
    if ds.len() < 2 {
        return Err(Error::DatasetTooSmall {
            have: ds.len(),
            need: 2,
        });
    }
    let enc = Encoder::new(ds.space());
    let (x, y) = xy(ds, &enc);
    let labels: Vec<Verdict> = y.iter().map(|&f| Fitness(f).verdict()).collect();
    let params = TreeParams {
        max_depth: hp.usize_or("max_depth", 5),
        min_leaf: hp.usize_or("min_leaf", 1).max(1),
        max_features: None,
    };
    let weight = match (hp.get("pass_weight"), hp.get("fail_weight")) {
        (None, None) => ClassWeight::Balanced,
        (p, f) => ClassWeight::Custom {
            pass: p.unwrap_or(1.0),
            fail: f.unwrap_or(1.0),
        },
    };
    Ok(tree::fit_classification(&x, &labels, &params, weight))
}

#[derive(Debug, Clone, Copy)]
pub struct TreeFactory;

#[derive(Debug)]
struct TreeRegressor(RegressionTree);

impl Regressor for TreeRegressor {
    fn predict(&self, x: &[f64]) -> f64 {
        *self.0.predict(x)
    }
}

impl RegressorFactory for TreeFactory {
    fn model_type(&self) -> ModelType {
        ModelType::RT
    }
    fn default_params(&self) -> HyperParams {
        HyperParams::new().with("max_depth", 8.0).with("min_leaf", 1.0)
    }
    fn grid(&self) -> ParamGrid {
        let mut g = ParamGrid::new();
        g.insert("max_depth".into(), (2..=10).map(f64::from).collect());
        g.insert("min_leaf".into(), vec![1.0, 2.0, 4.0]);
        g
    }
    fn fit(&self, x: &[Vec<f64>], y: &[f64], hp: &HyperParams, _rng: &mut Rng) -> Result<Arc<dyn Regressor>> {
        Ok(Arc::new(TreeRegressor(tree::fit_regression(x, y, &tree_params(hp), None))))
    }
}
