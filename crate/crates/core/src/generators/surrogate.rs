//! Surrogate-assisted generation with confidence-interval gating, using a
//! single surrogate type or the best of several.

use std::collections::BTreeMap;

use serde_json::json;

use super::{Action, GenerationResult, GeneratorConfig, OverheadModel, Run, Strategy};
use crate::budget::{Charge, ExecutionBudget};
use crate::error::{Error, Result};
use crate::models::tune::{tune_with, CV_FOLDS};
use crate::models::{registry, train, HyperParams, ModelType, RandomSearch, TrainOptions, TrainedModel};
use crate::rng::{fork, Rng};
use crate::sampling::sample_uniform;
use crate::space::{FitnessRange, LabeledDataset, LabeledRow, Source};
use crate::subjects::Subject;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// The whole interval lies on one side of zero; keep the prediction.
    Predict,
    Execute,
}

/// Decision for prediction `f` with error `e`. The pass side is `>= 0`.
pub fn gate(f: f64, e: f64) -> Gate {
    let all_pass = f >= 0.0 && f - e >= 0.0 && f + e >= 0.0;
    let all_fail = f < 0.0 && f - e < 0.0 && f + e < 0.0;
    if all_pass || all_fail {
        Gate::Predict
    } else {
        Gate::Execute
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: TrainedModel,
    /// Holdout error of every candidate type that trained successfully.
    pub errors: Vec<(ModelType, f64)>,
}

pub trait SurrogateTrainer {
    fn train(&mut self, executed: &LabeledDataset, rng: &mut Rng) -> Result<Trained>;
    /// Simulated cost of the next `train` call.
    fn next_cost(&self, overhead: &OverheadModel) -> f64;
}

/// Trains each listed type and keeps the one with the lowest holdout error;
/// ties go to the type listed first in [`ModelType`] order.
#[derive(Debug, Clone)]
pub struct ModelTrainer {
    types: Vec<ModelType>,
    trials: usize,
    tune_once: bool,
    tuned: Option<BTreeMap<ModelType, HyperParams>>,
    clip: FitnessRange,
}

impl ModelTrainer {
    pub fn new(mut types: Vec<ModelType>, trials: usize, tune_once: bool, clip: FitnessRange) -> Self {
        types.sort();
        types.dedup();
        Self {
            types,
            trials,
            tune_once,
            tuned: None,
            clip,
        }
    }

    fn needs_tuning(&self) -> bool {
        self.tuned.is_none() || !self.tune_once
    }
}

impl SurrogateTrainer for ModelTrainer {
    fn train(&mut self, executed: &LabeledDataset, rng: &mut Rng) -> Result<Trained> {
        if self.needs_tuning() {
            let mut tuned = BTreeMap::new();
            for &t in &self.types {
                let f = registry().get(t)?;
                let (hp, _) = tune_with(
                    f.as_ref(),
                    &f.grid(),
                    &RandomSearch,
                    executed,
                    self.trials,
                    &mut fork(rng, t.name()),
                )?;
                tuned.insert(t, hp);
            }
            self.tuned = Some(tuned);
        }
        let tuned = self.tuned.as_ref().expect("tuned above");
        // identical split for every type
        let base = fork(rng, "fit");
        let mut best: Option<TrainedModel> = None;
        let mut errors = Vec::new();
        for &t in &self.types {
            let opts = TrainOptions {
                params: tuned.get(&t).cloned().unwrap_or_default(),
                clip: Some(self.clip),
                ..TrainOptions::default()
            };
            match train(t, executed, &opts, &mut base.clone()) {
                Ok(m) => {
                    errors.push((t, m.holdout_mae()));
                    if best.as_ref().is_none_or(|b| m.holdout_mae() < b.holdout_mae()) {
                        best = Some(m);
                    }
                }
                Err(e @ Error::DatasetTooSmall { .. }) => return Err(e),
                Err(_) => {}
            }
        }
        match best {
            Some(model) => Ok(Trained { model, errors }),
            None => Err(Error::Numerical("no surrogate type could be trained".into())),
        }
    }

    fn next_cost(&self, o: &OverheadModel) -> f64 {
        let k = self.types.len() as f64;
        let tuning = if self.needs_tuning() {
            k * self.trials as f64 * CV_FOLDS as f64
        } else {
            0.0
        };
        (k + tuning) * o.per_fit
    }
}

/// The gated generation loop with an arbitrary trainer.
pub fn run_surrogate_loop(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
    trainer: &mut dyn SurrogateTrainer,
) -> Result<GenerationResult> {
    let mut run = Run::start(subject, cfg, budget, rng)?;
    let space = subject.space().clone();
    let mut retrain = true;
    let mut current: Option<Trained> = None;
    while !budget.is_exhausted() && run.dataset.len() < cfg.max_rows {
        run.iteration += 1;
        if retrain {
            if !run.overhead(budget, trainer.next_cost(&cfg.overhead))? {
                break;
            }
            match trainer.train(&run.executed, &mut fork(rng, "train")) {
                Ok(tr) => {
                    let errors: BTreeMap<String, f64> =
                        tr.errors.iter().map(|(t, e)| (t.name().to_string(), *e)).collect();
                    run.event(
                        Action::Train,
                        json!({
                            "active": tr.model.model_type(),
                            "mae": tr.model.holdout_mae(),
                            "rows": run.executed.len(),
                            "errors": errors,
                        }),
                    );
                    current = Some(tr);
                }
                Err(Error::DatasetTooSmall { .. }) => current = None,
                Err(e) => return Err(e),
            }
            retrain = false;
        }
        let t = sample_uniform(&space, rng);
        let Some(tr) = &current else {
            if !run.execute(t, budget)? {
                break;
            }
            retrain = true;
            continue;
        };
        if budget.charge(Charge::Overhead(cfg.overhead.per_prediction)).is_err() {
            break;
        }
        let f = tr.model.predict(&t)?;
        let e = tr.model.holdout_mae();
        match gate(f.0, e) {
            Gate::Predict => {
                run.event(Action::Predict, json!({ "fitness": f.0, "error": e }));
                run.dataset.push(LabeledRow {
                    input: t,
                    fitness: f,
                    source: Source::Predicted,
                })?;
            }
            Gate::Execute => {
                if !run.execute(t, budget)? {
                    break;
                }
                retrain = true;
            }
        }
    }
    let name = cfg.strategy.name();
    Ok(run.finish(name, current.map(|t| t.model.summary()), None))
}

fn trainer_for(subject: &dyn Subject, cfg: &GeneratorConfig, types: Vec<ModelType>) -> ModelTrainer {
    ModelTrainer::new(types, cfg.tuning_trials, cfg.retrain_tune_once, subject.fitness_range())
}

pub fn run_surrogate_assisted(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<GenerationResult> {
    let Strategy::SA(t) = cfg.strategy else {
        return Err(Error::Config(format!("{} is not a single-surrogate strategy", cfg.strategy)));
    };
    let mut trainer = trainer_for(subject, cfg, vec![t]);
    run_surrogate_loop(subject, cfg, budget, rng, &mut trainer)
}

pub fn run_dynamic_surrogate(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<GenerationResult> {
    let Strategy::SaDyn(types) = &cfg.strategy else {
        return Err(Error::Config(format!("{} is not the dynamic strategy", cfg.strategy)));
    };
    if types.len() < 2 {
        return Err(Error::Config("the dynamic strategy needs at least two types".into()));
    }
    let mut trainer = trainer_for(subject, cfg, types.clone());
    run_surrogate_loop(subject, cfg, budget, rng, &mut trainer)
}
