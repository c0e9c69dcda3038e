//! Seeded experiment sweeps over subjects, strategies and seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::ExecutionBudget;
use crate::error::{Error, Result};
use crate::generators::{generate, GenerationResult, GeneratorConfig, Strategy};
use crate::models::{fit_class_tree, ModelSummary};
use crate::rng::{stream, Rng};
use crate::rules::{
    binarize, enumerate_sum_features, extract_fail_rules, individual_features, learn_ruleset, minimize_rules,
    Binarized, Feature, RipperParams, Rule, RuleSet,
};
use crate::sampling::generate_tests;
use crate::space::{InputSpace, LabeledDataset, Source, TestInput, Verdict};
use crate::subjects::{reference_verdict, Subject, SubjectRegistry};

use super::metrics::{evaluate_model, mislabel_count, MetricReport, TreeClassifier};
use super::pareto::{pareto_front, ParetoPoint};
use super::stats::{compare, ComparisonResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePolicy {
    Individual,
    /// Individual variables plus every subset sum, as one feature set.
    SumSubsets,
    /// Pick among the subset-sum feature sets by held-out accuracy.
    #[default]
    AutoSelect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSpec {
    pub max_executions: usize,
    /// Defaults to `max_executions * exec_cost`.
    pub max_simulated_time: Option<f64>,
    /// Defaults to the subject's own cost.
    pub exec_cost: Option<f64>,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        Self { max_executions: 100, max_simulated_time: None, exec_cost: None }
    }
}

impl BudgetSpec {
    pub fn for_subject(&self, s: &dyn Subject) -> Result<ExecutionBudget> {
        let cost = self.exec_cost.unwrap_or_else(|| s.exec_cost());
        let time = self.max_simulated_time.unwrap_or(self.max_executions as f64 * cost);
        ExecutionBudget::new(self.max_executions, time, cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub min_accuracy: f64,
    pub repetitions: usize,
    pub test_size: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { min_accuracy: 0.8, repetitions: 3, test_size: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub subjects: Vec<String>,
    /// Constructor parameters per subject; absent means defaults.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub subject_params: BTreeMap<String, serde_json::Value>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub budget: BudgetSpec,
    /// Base generator settings; the strategy field is replaced per run.
    pub generator: GeneratorConfig,
    /// Share of executions spent on preprocessing. `None` keeps the
    /// generator's own initial dataset size.
    pub preprocessing_share: Option<f64>,
    pub feature_policy: FeaturePolicy,
    pub test_set_size: usize,
    pub ripper: RipperParams,
    /// Tune the rule learner once per subject on the union of all datasets.
    pub tune_rules: bool,
    /// Row cap for the union dataset used in tuning and selection.
    pub tuning_rows: usize,
    pub selection: SelectionConfig,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            subjects: Vec::new(),
            subject_params: BTreeMap::new(),
            strategies: Vec::new(),
            seeds: Vec::new(),
            budget: BudgetSpec::default(),
            generator: GeneratorConfig::default(),
            preprocessing_share: Some(0.5),
            feature_policy: FeaturePolicy::default(),
            test_set_size: 2000,
            ripper: RipperParams::default(),
            tune_rules: true,
            tuning_rows: 3000,
            selection: SelectionConfig::default(),
            workers: 0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.subjects.is_empty() || self.strategies.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("plan needs at least one subject, strategy and seed".into()));
        }
        if self.test_set_size == 0 {
            return Err(Error::Config("test_set_size must be positive".into()));
        }
        if let Some(s) = self.preprocessing_share {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Config("preprocessing_share must lie in (0, 1)".into()));
            }
        }
        if self.selection.repetitions == 0 || self.selection.test_size == 0 {
            return Err(Error::Config("selection needs repetitions and a test set".into()));
        }
        self.ripper.validate()?;
        for s in &self.strategies {
            self.generator_for(s.clone())?.validate()?;
        }
        Ok(())
    }

    /// Generator config for one strategy, with the preprocessing share applied.
    pub fn generator_for(&self, strategy: Strategy) -> Result<GeneratorConfig> {
        let mut cfg = GeneratorConfig { strategy, ..self.generator.clone() };
        if let Some(share) = self.preprocessing_share {
            let d = (share * self.budget.max_executions as f64) as usize / 2 * 2;
            if d < 4 {
                return Err(Error::Config(format!(
                    "preprocessing share {share} of {} executions leaves fewer than 4 inputs",
                    self.budget.max_executions
                )));
            }
            cfg.sampler.initial_dataset_size = d;
        }
        Ok(cfg)
    }

    pub fn resolve_subjects(&self) -> Result<Vec<Arc<dyn Subject>>> {
        let reg = SubjectRegistry::default();
        self.subjects
            .iter()
            .map(|name| reg.build(name, self.subject_params.get(name).unwrap_or(&serde_json::Value::Null)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub dataset_size: usize,
    pub executed_rows: usize,
    pub predicted_rows: usize,
    pub mislabels: usize,
    pub executions_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surrogate: Option<ModelSummary>,
    /// Failure model (rules) on the fresh test set.
    pub rules: MetricReport,
    /// Decision tree on the same test set: the loop's own tree for SOTA,
    /// otherwise one trained on the generated dataset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<MetricReport>,
    /// Minimized 100%-confidence fail rules.
    pub fail_rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub subject: String,
    pub strategy: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<RunMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub features: Vec<String>,
    pub accuracy: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub runs: usize,
    pub failed: usize,
    pub median_mislabels: Option<f64>,
    pub median_dataset_size: Option<f64>,
    pub mean_accuracy: Option<f64>,
    pub median_accuracy: Option<f64>,
    pub mean_precision_fail: Option<f64>,
    pub mean_recall_fail: Option<f64>,
    pub mean_tree_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: String,
    pub b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ComparisonResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub subject: String,
    pub feature_set: Vec<String>,
    pub rule_params: RipperParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<SelectionRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setup_error: Option<String>,
    pub strategies: Vec<StrategySummary>,
    pub pareto_points: Vec<ParetoPoint>,
    pub pareto_front: Vec<ParetoPoint>,
    pub accuracy_comparisons: Vec<PairComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub strategies: Vec<StrategySummary>,
    pub accuracy_comparisons: Vec<PairComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub plan: ExperimentPlan,
    pub runs: Vec<RunRecord>,
    pub subjects: Vec<SubjectSummary>,
    pub suite: SuiteSummary,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn run(&self, subject: &str, strategy: &str, seed: u64) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.subject == subject && r.strategy == strategy && r.seed == seed)
    }

    pub fn markdown(&self) -> String {
        let mut out = String::from("# Experiment report\n\n");
        let _ = writeln!(
            out,
            "{} runs ({} failed) over {} subjects, {} strategies, {} seeds.\n",
            self.runs.len(),
            self.failed_runs(),
            self.plan.subjects.len(),
            self.plan.strategies.len(),
            self.plan.seeds.len()
        );
        for s in &self.subjects {
            let _ = writeln!(out, "## {}\n", s.subject);
            if let Some(e) = &s.setup_error {
                let _ = writeln!(out, "Setup failed: {e}\n");
            }
            let _ = writeln!(out, "Features: {}\n", s.feature_set.join(", "));
            summary_table(&mut out, &s.strategies);
            let _ = writeln!(out, "\n### Pareto front (median mislabels, median dataset size)\n");
            let _ = writeln!(out, "| strategy | errors | dataset size | on front |");
            let _ = writeln!(out, "|---|---:|---:|:---:|");
            for p in &s.pareto_points {
                let on = s.pareto_front.iter().any(|q| q.algorithm == p.algorithm);
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    p.algorithm,
                    p.errors,
                    p.dataset_size,
                    if on { "yes" } else { "" }
                );
            }
            let _ = writeln!(out, "\n### Accuracy comparisons\n");
            comparison_matrix(&mut out, &s.accuracy_comparisons);
            out.push('\n');
        }
        let _ = writeln!(out, "## Suite\n");
        summary_table(&mut out, &self.suite.strategies);
        let _ = writeln!(out, "\n### Accuracy comparisons (pooled)\n");
        comparison_matrix(&mut out, &self.suite.accuracy_comparisons);
        out
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn summary_table(out: &mut String, rows: &[StrategySummary]) {
    let _ = writeln!(
        out,
        "| strategy | runs | failed | median mislabels | median size | mean acc | median acc | mean prec | mean recall | mean tree acc |"
    );
    let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.strategy,
            r.runs,
            r.failed,
            opt(r.median_mislabels),
            opt(r.median_dataset_size),
            opt(r.mean_accuracy),
            opt(r.median_accuracy),
            opt(r.mean_precision_fail),
            opt(r.mean_recall_fail),
            opt(r.mean_tree_accuracy)
        );
    }
}

fn comparison_matrix(out: &mut String, pairs: &[PairComparison]) {
    let _ = writeln!(out, "| a | b | p-value | A12 | magnitude |");
    let _ = writeln!(out, "|---|---|---:|---:|---|");
    for c in pairs {
        match &c.result {
            Some(r) => {
                let _ = writeln!(out, "| {} | {} | {:.4} | {:.3} | {:?} |", c.a, c.b, r.p_value, r.a12, r.magnitude);
            }
            None => {
                let _ = writeln!(out, "| {} | {} | - | - | {} |", c.a, c.b, c.note.as_deref().unwrap_or(""));
            }
        }
    }
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Fresh uniformly sampled inputs labelled by the subject's reference verdict.
pub fn labelled_test_set(s: &dyn Subject, n: usize, rng: &mut Rng) -> Result<Vec<(TestInput, Verdict)>> {
    generate_tests(s.space(), n, rng)
        .into_iter()
        .map(|t| reference_verdict(s, &t).map(|v| (t, v)))
        .collect()
}

fn accuracy_of(rs: &RuleSet, test: &[(TestInput, Verdict)]) -> f64 {
    test.iter().filter(|(t, v)| rs.apply(t) == *v).count() as f64 / test.len() as f64
}

/// Result of the subset-sum feature-set selection.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    pub table: Vec<SelectionRow>,
    /// Index into `table` of the most accurate selected set, if any.
    pub best: Option<usize>,
    pub sets: Vec<Vec<Feature>>,
}

/// Learn one ruleset per candidate feature set on each training set, score
/// each on `test`, and keep the sets whose mean accuracy reaches the bar.
pub fn select_feature_sets(
    space: &InputSpace,
    training: &[Binarized],
    test: &[(TestInput, Verdict)],
    params: &RipperParams,
    min_accuracy: f64,
    seed: u64,
) -> Result<FeatureSelection> {
    if training.is_empty() || test.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sets = enumerate_sum_features(space)?;
    let scores: Vec<f64> = sets
        .par_iter()
        .enumerate()
        .map(|(k, feats)| {
            let accs: Vec<f64> = training
                .iter()
                .enumerate()
                .map(|(r, data)| {
                    let mut rng = stream(seed, &format!("select/{k}/{r}"));
                    learn_ruleset(data, feats, params, &mut rng).map_or(0.0, |rs| accuracy_of(&rs, test))
                })
                .collect();
            mean(&accs).unwrap_or(0.0)
        })
        .collect();
    let mut best: Option<usize> = None;
    let table: Vec<SelectionRow> = sets
        .iter()
        .zip(&scores)
        .enumerate()
        .map(|(k, (feats, &accuracy))| {
            let selected = accuracy >= min_accuracy;
            if selected && best.is_none_or(|b| accuracy > scores[b]) {
                best = Some(k);
            }
            SelectionRow { features: feats.iter().map(|f| f.name.clone()).collect(), accuracy, selected }
        })
        .collect();
    Ok(FeatureSelection { table, best, sets })
}

fn subsample(data: &Binarized, cap: usize, rng: &mut Rng) -> Binarized {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    if idx.len() > cap {
        idx.shuffle(rng);
        idx.truncate(cap);
        idx.sort_unstable();
    }
    data.select(&idx)
}

/// Stratified two-thirds / one-third split.
fn split(data: &Binarized, rng: &mut Rng) -> (Binarized, Binarized) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for v in [Verdict::Pass, Verdict::Fail] {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == v).collect();
        idx.shuffle(rng);
        let cut = (idx.len() * 2).div_ceil(3);
        a.extend_from_slice(&idx[..cut]);
        b.extend_from_slice(&idx[cut..]);
    }
    a.sort_unstable();
    b.sort_unstable();
    (data.select(&a), data.select(&b))
}

/// Grid search over the learner's coverage and rule-length limits, scored
/// by held-out accuracy on a split of `data`.
pub fn tune_rule_learner(data: &Binarized, features: &[Feature], base: &RipperParams, seed: u64) -> RipperParams {
    let mut rng = stream(seed, "tune-rules/split");
    let (train, valid) = split(data, &mut rng);
    if valid.is_empty() || train.counts().0 == 0 || train.counts().1 == 0 {
        return base.clone();
    }
    let mut best = (f64::NEG_INFINITY, base.clone());
    let mut k = 0;
    for min_coverage in [1, 2, 4] {
        for max_conditions in [3, 6, 12] {
            let p = RipperParams { min_coverage, max_conditions, ..base.clone() };
            let mut r = stream(seed, &format!("tune-rules/{k}"));
            k += 1;
            let Ok(rs) = learn_ruleset(&train, features, &p, &mut r) else { continue };
            let correct = (0..valid.len()).filter(|&i| rs.apply(&valid.inputs[i]) == valid.labels[i]).count();
            let acc = correct as f64 / valid.len() as f64;
            if acc > best.0 {
                best = (acc, p);
            }
        }
    }
    best.1
}

struct SubjectSetup {
    features: Vec<Feature>,
    params: RipperParams,
    selection: Option<Vec<SelectionRow>>,
    /// Every selected feature set, for rule extraction.
    extra_sets: Vec<Vec<Feature>>,
}

fn setup_subject(plan: &ExperimentPlan, subject: &dyn Subject, datasets: &[&LabeledDataset]) -> Result<SubjectSetup> {
    let space = subject.space();
    let base_seed = plan.seeds[0];
    let name = subject.name();
    let mut union = LabeledDataset::new(space.clone());
    for ds in datasets {
        for row in ds.rows() {
            union.push(row.clone())?;
        }
    }
    let union = binarize(&union);
    let mut rng = stream(base_seed, &format!("union/{name}"));
    let tuning = subsample(&union, plan.tuning_rows, &mut rng);

    let cumulative = subject.cumulative_inputs() && space.variables().iter().filter(|v| v.is_real()).count() >= 2;
    let (features, selection, extra_sets) = match plan.feature_policy {
        FeaturePolicy::Individual => (individual_features(space), None, Vec::new()),
        FeaturePolicy::SumSubsets if cumulative => {
            let mut f = individual_features(space);
            for set in enumerate_sum_features(space)? {
                if set.len() == 1 {
                    f.extend(set);
                }
            }
            (f, None, Vec::new())
        }
        FeaturePolicy::AutoSelect if cumulative => {
            let reps: Vec<Binarized> = (0..plan.selection.repetitions)
                .map(|r| {
                    let mut rng = stream(base_seed, &format!("select/{name}/{r}"));
                    subsample(&union, plan.tuning_rows, &mut rng)
                })
                .collect();
            let mut trng = stream(base_seed, &format!("select-test/{name}"));
            let test = labelled_test_set(subject, plan.selection.test_size, &mut trng)?;
            let sel = select_feature_sets(space, &reps, &test, &plan.ripper, plan.selection.min_accuracy, base_seed)?;
            let chosen = sel.best.map_or_else(|| individual_features(space), |b| sel.sets[b].clone());
            let extra = sel
                .table
                .iter()
                .zip(&sel.sets)
                .filter(|(row, _)| row.selected)
                .map(|(_, s)| s.clone())
                .collect();
            (chosen, Some(sel.table), extra)
        }
        _ => (individual_features(space), None, Vec::new()),
    };
    let params = if plan.tune_rules {
        tune_rule_learner(&tuning, &features, &plan.ripper, base_seed)
    } else {
        plan.ripper.clone()
    };
    Ok(SubjectSetup { features, params, selection, extra_sets })
}

struct Generated {
    result: GenerationResult,
    mislabels: usize,
    executions_used: usize,
}

fn generate_run(plan: &ExperimentPlan, subject: &dyn Subject, strategy: &Strategy, seed: u64) -> Result<Generated> {
    let cfg = plan.generator_for(strategy.clone())?;
    let mut budget = plan.budget.for_subject(subject)?;
    // all strategies share the preprocessing stream for a given seed
    let mut rng = stream(seed, &format!("generate/{}", subject.name()));
    let result = generate(subject, &cfg, &mut budget, &mut rng)?;
    let mislabels = mislabel_count(&result, subject)?;
    Ok(Generated { result, mislabels, executions_used: budget.consumed_executions() })
}

fn evaluate_run(
    plan: &ExperimentPlan,
    subject: &dyn Subject,
    setup: &SubjectSetup,
    g: &Generated,
    strategy: &Strategy,
    seed: u64,
    test: &[(TestInput, Verdict)],
) -> Result<RunMetrics> {
    let ds = &g.result.dataset;
    let data = binarize(ds);
    let mut rng = stream(seed, &format!("rules/{}/{}", subject.name(), strategy.name()));
    let rs = learn_ruleset(&data, &setup.features, &setup.params, &mut rng)?;
    let rules = evaluate_model(&rs, test)?;

    let mut fail = extract_fail_rules(&rs);
    for (k, set) in setup.extra_sets.iter().enumerate() {
        if *set == setup.features {
            continue;
        }
        let mut r = stream(seed, &format!("rules/{}/{}/extra-{k}", subject.name(), strategy.name()));
        if let Ok(extra) = learn_ruleset(&data, set, &setup.params, &mut r) {
            fail.extend(extract_fail_rules(&extra));
        }
    }
    let fail_rules = minimize_rules(&fail, subject.space())?;

    let tree = match (&g.result.tree, strategy) {
        (Some(t), Strategy::Sota) => Some(TreeClassifier::new(t.clone(), subject.space())),
        _ => fit_class_tree(ds, &plan.generator.sota_tree)
            .ok()
            .map(|t| TreeClassifier::new(t, subject.space())),
    };
    let tree = tree.map(|t| evaluate_model(&t, test)).transpose()?;

    Ok(RunMetrics {
        dataset_size: ds.len(),
        executed_rows: ds.count_source(Source::Executed),
        predicted_rows: ds.count_source(Source::Predicted),
        mislabels: g.mislabels,
        executions_used: g.executions_used,
        surrogate: g.result.surrogate.clone(),
        rules,
        tree,
        fail_rules,
    })
}

fn summarize(strategy: &str, records: &[&RunRecord]) -> StrategySummary {
    let ok: Vec<&RunMetrics> = records.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let col = |f: &dyn Fn(&RunMetrics) -> Option<f64>| ok.iter().filter_map(|m| f(m)).collect::<Vec<f64>>();
    let acc = col(&|m| Some(m.rules.accuracy));
    StrategySummary {
        strategy: strategy.to_string(),
        runs: records.len(),
        failed: records.len() - ok.len(),
        median_mislabels: median(&col(&|m| Some(m.mislabels as f64))),
        median_dataset_size: median(&col(&|m| Some(m.dataset_size as f64))),
        mean_accuracy: mean(&acc),
        median_accuracy: median(&acc),
        mean_precision_fail: mean(&col(&|m| m.rules.precision_fail)),
        mean_recall_fail: mean(&col(&|m| m.rules.recall_fail)),
        mean_tree_accuracy: mean(&col(&|m| m.tree.map(|t| t.accuracy))),
    }
}

fn pairwise(names: &[String], samples: &BTreeMap<String, Vec<f64>>) -> Vec<PairComparison> {
    let mut out = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let empty = Vec::new();
            let a = samples.get(&names[i]).unwrap_or(&empty);
            let b = samples.get(&names[j]).unwrap_or(&empty);
            let (result, note) = match compare(a, b) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(PairComparison { a: names[i].clone(), b: names[j].clone(), result, note });
        }
    }
    out
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Run every (subject, strategy, seed) combination of the plan.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let subjects = plan.resolve_subjects()?;
    let pool = build_pool(plan.workers)?;
    pool.install(|| run_in_pool(plan, &subjects))
}

fn run_in_pool(plan: &ExperimentPlan, subjects: &[Arc<dyn Subject>]) -> Result<ExperimentReport> {
    let mut jobs = Vec::new();
    for (si, _) in subjects.iter().enumerate() {
        for st in &plan.strategies {
            for &seed in &plan.seeds {
                jobs.push((si, st.clone(), seed));
            }
        }
    }
    let generated: Vec<Result<Generated>> = jobs
        .par_iter()
        .map(|(si, st, seed)| generate_run(plan, subjects[*si].as_ref(), st, *seed))
        .collect();

    let setups: Vec<Result<SubjectSetup>> = subjects
        .iter()
        .enumerate()
        .map(|(si, s)| {
            let datasets: Vec<&LabeledDataset> = jobs
                .iter()
                .zip(&generated)
                .filter(|((j, _, _), _)| *j == si)
                .filter_map(|(_, g)| g.as_ref().ok().map(|g| &g.result.dataset))
                .collect();
            setup_subject(plan, s.as_ref(), &datasets)
        })
        .collect();

    let mut tests: BTreeMap<(usize, u64), Result<Vec<(TestInput, Verdict)>>> = BTreeMap::new();
    for (si, s) in subjects.iter().enumerate() {
        for &seed in &plan.seeds {
            let mut rng = stream(seed, &format!("test/{}", s.name()));
            tests.insert((si, seed), labelled_test_set(s.as_ref(), plan.test_set_size, &mut rng));
        }
    }

    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .zip(generated.par_iter())
        .map(|((si, st, seed), g)| {
            let s = subjects[*si].as_ref();
            let outcome = (|| {
                let g = g.as_ref().map_err(Clone::clone)?;
                let setup = setups[*si].as_ref().map_err(Clone::clone)?;
                let test = tests[&(*si, *seed)].as_ref().map_err(Clone::clone)?;
                evaluate_run(plan, s, setup, g, st, *seed, test)
            })();
            RunRecord {
                subject: s.name().to_string(),
                strategy: st.name(),
                seed: *seed,
                error: outcome.as_ref().err().map(ToString::to_string),
                metrics: outcome.ok(),
            }
        })
        .collect();

    let names: Vec<String> = plan.strategies.iter().map(Strategy::name).collect();
    let mut summaries = Vec::new();
    for (si, s) in subjects.iter().enumerate() {
        let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.subject == s.name()).collect();
        let strategies: Vec<StrategySummary> = names
            .iter()
            .map(|n| summarize(n, &mine.iter().copied().filter(|r| &r.strategy == n).collect::<Vec<_>>()))
            .collect();
        let pareto_points: Vec<ParetoPoint> = strategies
            .iter()
            .filter_map(|st| {
                Some(ParetoPoint::new(st.strategy.clone(), st.median_mislabels?, st.median_dataset_size?))
            })
            .collect();
        let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in &mine {
            if let Some(m) = &r.metrics {
                acc.entry(r.strategy.clone()).or_default().push(m.rules.accuracy);
            }
        }
        let (feature_set, rule_params, selection, setup_error) = match &setups[si] {
            Ok(su) => (
                su.features.iter().map(|f| f.name.clone()).collect(),
                su.params.clone(),
                su.selection.clone(),
                None,
            ),
            Err(e) => (Vec::new(), plan.ripper.clone(), None, Some(e.to_string())),
        };
        summaries.push(SubjectSummary {
            subject: s.name().to_string(),
            feature_set,
            rule_params,
            selection,
            setup_error,
            strategies,
            pareto_front: pareto_front(&pareto_points),
            pareto_points,
            accuracy_comparisons: pairwise(&names, &acc),
        });
    }

    let mut pooled: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &runs {
        if let Some(m) = &r.metrics {
            pooled.entry(r.strategy.clone()).or_default().push(m.rules.accuracy);
        }
    }
    let suite = SuiteSummary {
        strategies: names
            .iter()
            .map(|n| summarize(n, &runs.iter().filter(|r| &r.strategy == n).collect::<Vec<_>>()))
            .collect(),
        accuracy_comparisons: pairwise(&names, &pooled),
    };
    Ok(ExperimentReport { plan: plan.clone(), runs, subjects: summaries, suite })
}
