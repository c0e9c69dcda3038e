//! Test-generation strategies.
//!
//! Every strategy implements [`Generator`] and is registered by name in a
//! [`GeneratorRegistry`]. All of them start from the same preprocessing
//! phase and stop when the execution budget cannot pay for another run of
//! the subject.

mod guided;
mod random;
mod sota;
mod surrogate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::budget::{Charge, ExecutionBudget};
use crate::error::{Error, Result};
use crate::models::{ClassTree, HyperParams, LogisticParams, ModelSummary, ModelType};
use crate::rng::Rng;
use crate::sampling::SamplerConfig;
use crate::space::{LabeledDataset, LabeledRow, Source, TestInput};
use crate::subjects::{execute, Subject};

pub use guided::{run_lr_guided, run_rt_guided, shrink_ranges, LeafChoice, RangeBox};
pub use random::run_random_search;
pub use sota::{path_box, run_sota, sample_in_box, PathBox};
pub use surrogate::{
    gate, run_dynamic_surrogate, run_surrogate_assisted, run_surrogate_loop, Gate, ModelTrainer,
    SurrogateTrainer, Trained,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    SA(ModelType),
    SaDyn(Vec<ModelType>),
    RtGuided,
    LrGuided,
    Sota,
    Rs,
}

impl Strategy {
    pub fn name(&self) -> String {
        match self {
            Strategy::SA(t) => format!("SA_{t}"),
            Strategy::SaDyn(types) if types.as_slice() == ModelType::SURROGATES => "SA_DYN".into(),
            Strategy::SaDyn(types) => {
                let names: Vec<&str> = types.iter().map(|t| t.name()).collect();
                format!("SA_DYN({})", names.join(","))
            }
            Strategy::RtGuided => "RT_GUIDED".into(),
            Strategy::LrGuided => "LR_GUIDED".into(),
            Strategy::Sota => "SOTA".into(),
            Strategy::Rs => "RS".into(),
        }
    }

    /// Registry key; every dynamic type list shares one entry.
    pub fn key(&self) -> String {
        match self {
            Strategy::SaDyn(_) => "SA_DYN".into(),
            other => other.name(),
        }
    }

    /// The twelve named strategies: seven single-surrogate configurations,
    /// the dynamic one, and the four non-surrogate ones.
    pub fn all() -> Vec<Strategy> {
        let mut v: Vec<Strategy> = ModelType::SURROGATES.iter().map(|&t| Strategy::SA(t)).collect();
        v.push(Strategy::SaDyn(ModelType::SURROGATES.to_vec()));
        v.extend([Strategy::RtGuided, Strategy::LrGuided, Strategy::Sota, Strategy::Rs]);
        v
    }

    /// The eight surrogate-assisted configurations.
    pub fn surrogate_family() -> Vec<Strategy> {
        Self::all().into_iter().take(8).collect()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase();
        if let Some(list) = up.strip_prefix("SA_DYN(").and_then(|r| r.strip_suffix(')')) {
            let types = list
                .split(',')
                .map(|t| t.trim().parse::<ModelType>())
                .collect::<Result<Vec<_>>>()?;
            return Ok(Strategy::SaDyn(types));
        }
        Ok(match up.as_str() {
            "SA_DYN" => Strategy::SaDyn(ModelType::SURROGATES.to_vec()),
            "RT_GUIDED" => Strategy::RtGuided,
            "LR_GUIDED" => Strategy::LrGuided,
            "SOTA" => Strategy::Sota,
            "RS" => Strategy::Rs,
            _ => match up.strip_prefix("SA_") {
                Some(t) => {
                    let t: ModelType = t.parse()?;
                    if !t.is_regressor() {
                        return Err(Error::Unknown {
                            kind: "strategy",
                            name: s.to_string(),
                        });
                    }
                    Strategy::SA(t)
                }
                None => {
                    return Err(Error::Unknown {
                        kind: "strategy",
                        name: s.to_string(),
                    })
                }
            },
        })
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.name()
    }
}

/// Simulated cost of non-execution work, in the same unit as exec_cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadModel {
    /// Per model fit (each CV fold of a tuning trial counts as one fit).
    pub per_fit: f64,
    pub per_prediction: f64,
}

impl Default for OverheadModel {
    fn default() -> Self {
        Self {
            per_fit: 0.05,
            per_prediction: 0.0005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub strategy: Strategy,
    pub sampler: SamplerConfig,
    pub margin_pct: f64,
    pub lr_candidates: usize,
    pub retrain_tune_once: bool,
    /// Random-search trials per surrogate type when tuning.
    pub tuning_trials: usize,
    pub logistic: LogisticParams,
    /// Regression tree parameters for RT_GUIDED.
    pub rt_tree: HyperParams,
    /// Classification tree parameters for SOTA.
    pub sota_tree: HyperParams,
    pub sota_inputs_per_path: usize,
    pub overhead: OverheadModel,
    /// Hard cap on dataset rows; stops runs whose surrogate never asks for
    /// an execution.
    pub max_rows: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Rs,
            sampler: SamplerConfig::default(),
            margin_pct: 0.05,
            lr_candidates: 100,
            retrain_tune_once: true,
            tuning_trials: 8,
            logistic: LogisticParams::default(),
            rt_tree: HyperParams::new().with("max_depth", 6.0).with("min_leaf", 2.0),
            sota_tree: HyperParams::new().with("max_depth", 5.0),
            sota_inputs_per_path: 1,
            overhead: OverheadModel::default(),
            max_rows: 2_000,
        }
    }
}

impl GeneratorConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(self.margin_pct > 0.0 && self.margin_pct < 0.5) {
            return Err(Error::Config(format!("margin_pct must be in (0, 0.5), got {}", self.margin_pct)));
        }
        if self.lr_candidates < 2 {
            return Err(Error::Config("lr_candidates must be >= 2".into()));
        }
        if self.tuning_trials == 0 {
            return Err(Error::Config("tuning_trials must be >= 1".into()));
        }
        if self.sota_inputs_per_path == 0 {
            return Err(Error::Config("sota_inputs_per_path must be >= 1".into()));
        }
        if let Strategy::SaDyn(types) = &self.strategy {
            if types.len() < 2 || types.iter().any(|t| !t.is_regressor()) {
                return Err(Error::Config("SA_DYN needs at least two regressor types".into()));
            }
        }
        let o = self.overhead;
        if !(o.per_fit >= 0.0 && o.per_fit.is_finite() && o.per_prediction >= 0.0 && o.per_prediction.is_finite()) {
            return Err(Error::Config("overhead costs must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Train,
    Predict,
    Execute,
    ShrinkRange,
    PickCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub iteration: usize,
    pub action: Action,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct GenerationResult {
    pub strategy: String,
    pub dataset: LabeledDataset,
    /// Executed rows only, in the order they were executed.
    pub executed: LabeledDataset,
    pub surrogate: Option<ModelSummary>,
    /// The last classification tree of the SOTA loop.
    pub tree: Option<ClassTree>,
    pub preprocessing_truncated: bool,
    pub trace: Vec<TraceEvent>,
}

impl GenerationResult {
    /// Trace as line-delimited JSON.
    pub fn trace_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.trace {
            s.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            s.push('\n');
        }
        s
    }
}

/// Mutable state shared by the strategy loops.
pub(crate) struct Run<'a> {
    pub subject: &'a dyn Subject,
    pub dataset: LabeledDataset,
    pub executed: LabeledDataset,
    pub trace: Vec<TraceEvent>,
    pub iteration: usize,
    pub truncated: bool,
}

impl<'a> Run<'a> {
    pub fn start(subject: &'a dyn Subject, cfg: &GeneratorConfig, budget: &mut ExecutionBudget, rng: &mut Rng) -> Result<Self> {
        let pre = crate::sampling::preprocess(subject, &cfg.sampler, budget, rng)?;
        Ok(Self {
            subject,
            executed: pre.dataset.clone(),
            dataset: pre.dataset,
            trace: Vec::new(),
            iteration: 0,
            truncated: pre.truncated,
        })
    }

    pub fn event(&mut self, action: Action, payload: serde_json::Value) {
        self.trace.push(TraceEvent {
            iteration: self.iteration,
            action,
            payload,
        });
    }

    /// Executes and appends `t`; `Ok(false)` when the budget is exhausted.
    pub fn execute(&mut self, t: TestInput, budget: &mut ExecutionBudget) -> Result<bool> {
        match execute(self.subject, &t, budget) {
            Ok(f) => {
                let row = LabeledRow {
                    input: t,
                    fitness: f,
                    source: Source::Executed,
                };
                self.event(Action::Execute, serde_json::json!({ "fitness": f.0 }));
                self.dataset.push(row.clone())?;
                self.executed.push(row)?;
                Ok(true)
            }
            Err(Error::BudgetExhausted) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Pays for non-execution work; `false` when it does not fit.
    pub fn overhead(&mut self, budget: &mut ExecutionBudget, secs: f64) -> Result<bool> {
        match budget.charge(Charge::Overhead(secs)) {
            Ok(()) => Ok(true),
            Err(Error::BudgetExhausted) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn finish(self, strategy: String, surrogate: Option<ModelSummary>, tree: Option<ClassTree>) -> GenerationResult {
        GenerationResult {
            strategy,
            dataset: self.dataset,
            executed: self.executed,
            surrogate,
            tree,
            preprocessing_truncated: self.truncated,
            trace: self.trace,
        }
    }
}

pub trait Generator: Send + Sync {
    fn name(&self) -> String;
    fn generate(
        &self,
        subject: &dyn Subject,
        cfg: &GeneratorConfig,
        budget: &mut ExecutionBudget,
        rng: &mut Rng,
    ) -> Result<GenerationResult>;
}

struct Builtin(Strategy);

impl Generator for Builtin {
    fn name(&self) -> String {
        self.0.name()
    }
    fn generate(
        &self,
        subject: &dyn Subject,
        cfg: &GeneratorConfig,
        budget: &mut ExecutionBudget,
        rng: &mut Rng,
    ) -> Result<GenerationResult> {
        let strategy = if cfg.strategy.key() == self.0.key() {
            cfg.strategy.clone()
        } else {
            self.0.clone()
        };
        let cfg = GeneratorConfig {
            strategy,
            ..cfg.clone()
        };
        match &cfg.strategy {
            Strategy::SA(_) => run_surrogate_assisted(subject, &cfg, budget, rng),
            Strategy::SaDyn(_) => run_dynamic_surrogate(subject, &cfg, budget, rng),
            Strategy::RtGuided => run_rt_guided(subject, &cfg, budget, rng),
            Strategy::LrGuided => run_lr_guided(subject, &cfg, budget, rng),
            Strategy::Sota => run_sota(subject, &cfg, budget, rng),
            Strategy::Rs => run_random_search(subject, &cfg, budget, rng),
        }
    }
}

#[derive(Clone, Default)]
pub struct GeneratorRegistry {
    generators: BTreeMap<String, Arc<dyn Generator>>,
}

impl GeneratorRegistry {
    pub fn builtin() -> Self {
        let mut r = Self::default();
        for s in Strategy::all() {
            r.register(Arc::new(Builtin(s)));
        }
        r
    }

    pub fn register(&mut self, g: Arc<dyn Generator>) {
        self.generators.insert(g.name().to_ascii_uppercase(), g);
    }

    pub fn get(&self, name: &str) -> Result<&Arc<dyn Generator>> {
        let key = name.parse::<Strategy>().map_or_else(|_| name.to_ascii_uppercase(), |s| s.key());
        self.generators
            .get(&key)
            .ok_or_else(|| Error::Unknown {
                kind: "strategy",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.generators.keys().cloned().collect()
    }
}

impl fmt::Debug for GeneratorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.generators.keys()).finish()
    }
}

pub fn registry() -> &'static GeneratorRegistry {
    static REG: OnceLock<GeneratorRegistry> = OnceLock::new();
    REG.get_or_init(GeneratorRegistry::builtin)
}

/// Run the strategy named in `cfg`.
pub fn generate(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<GenerationResult> {
    cfg.validate()?;
    registry().get(&cfg.strategy.key())?.generate(subject, cfg, budget, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_roundtrip() {
        let all = Strategy::all();
        assert_eq!(all.len(), 12);
        for s in all {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("SA_ClassTree".parse::<Strategy>().is_err());
        assert!("GA".parse::<Strategy>().is_err());
        let custom = Strategy::SaDyn(vec![ModelType::GL, ModelType::RT]);
        assert_eq!(custom.name(), "SA_DYN(GL,RT)");
        assert_eq!(custom.name().parse::<Strategy>().unwrap(), custom);
    }

    #[test]
    fn registry_has_all_strategies() {
        let names = registry().names();
        assert_eq!(names.len(), 12);
        assert!(names.contains(&"SA_DYN".to_string()));
    }

    #[test]
    fn config_validation() {
        let mut c = GeneratorConfig::default();
        assert!(c.validate().is_ok());
        c.margin_pct = 0.5;
        assert!(c.validate().is_err());
        c = GeneratorConfig::default();
        c.lr_candidates = 1;
        assert!(c.validate().is_err());
        c = GeneratorConfig::with_strategy(Strategy::SaDyn(vec![ModelType::GL]));
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let c = GeneratorConfig::with_strategy(Strategy::SA(ModelType::RF));
        let s = serde_json::to_string(&c).unwrap();
        let back: GeneratorConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
