//! The subcommands. Each validates its inputs before running anything.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use failscope::evaluation::{
    evaluate_model, labelled_test_set, pareto_front, run_experiment, select_feature_sets, Classifier,
    ExperimentPlan, ExperimentReport, FeaturePolicy, MetricReport, ParetoPoint, TreeClassifier,
};
use failscope::generators::generate;
use failscope::models::ClassTree;
use failscope::rng::stream;
use failscope::rules::{
    binarize, enumerate_sum_features, extract_fail_rules, individual_features, learn_ruleset, minimize_rules,
    Feature, Rule, RuleSet,
};
use failscope::Subject;

use crate::config::RunConfig;
use crate::dataset::{read_dataset, write_dataset};
use crate::{CliError, CliResult};

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// File stem shared by the outputs of one generation run.
pub fn run_stem(subject: &str, strategy: &str, seed: u64) -> String {
    let strategy: String = strategy
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' })
        .collect();
    format!("{subject}_{strategy}_seed{seed}")
}

/// Generate one dataset per seed; returns the dataset paths.
pub fn cmd_generate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let subject = cfg.subject()?;
    let gen_cfg = cfg.generator_config()?;
    gen_cfg.validate()?;
    // budgets are checked for every seed before any is consumed
    for _ in &cfg.seeds {
        cfg.budget.for_subject(subject.as_ref())?;
    }
    create_dir(&cfg.out)?;
    let mut paths = Vec::new();
    for &seed in &cfg.seeds {
        let mut budget = cfg.budget.for_subject(subject.as_ref())?;
        let mut rng = stream(seed, &format!("generate/{}", subject.name()));
        let result = generate(subject.as_ref(), &gen_cfg, &mut budget, &mut rng).map_err(CliError::runtime)?;
        let stem = run_stem(subject.name(), &result.strategy, seed);
        let csv = cfg.out.join(format!("{stem}.csv"));
        write_dataset(&csv, &result.dataset)?;
        write(&cfg.out.join(format!("{stem}.trace.jsonl")), &result.trace_jsonl())?;
        if let Some(tree) = &result.tree {
            let json = serde_json::to_string_pretty(tree).map_err(CliError::runtime)?;
            write(&cfg.out.join(format!("{stem}.tree.json")), &json)?;
        }
        paths.push(csv);
    }
    Ok(paths)
}

#[derive(Debug, Serialize)]
struct SelectionLine {
    features: String,
    accuracy: f64,
    selected: bool,
}

/// Outputs of `learn`.
#[derive(Debug)]
pub struct Learned {
    pub ruleset: RuleSet,
    pub fail_rules: Vec<Rule>,
    pub rules_json: PathBuf,
}

/// Learn a failure model from a dataset file.
pub fn cmd_learn(cfg: &RunConfig, dataset: &Path) -> CliResult<Learned> {
    cfg.validate()?;
    let subject = cfg.subject()?;
    let ds = read_dataset(dataset, subject.space())?;
    let data = binarize(&ds);
    let seed = cfg.seeds[0];
    let space = subject.space();
    let cumulative = subject.cumulative_inputs();

    let mut selection_csv = None;
    let mut candidate_sets: Vec<Vec<Feature>> = Vec::new();
    let features = match cfg.feature_policy {
        FeaturePolicy::AutoSelect if cumulative => {
            let mut rng = stream(seed, &format!("select-test/{}", subject.name()));
            let test = labelled_test_set(subject.as_ref(), cfg.selection.test_size, &mut rng)?;
            let sel = select_feature_sets(space, std::slice::from_ref(&data), &test, &cfg.ripper, cfg.selection.min_accuracy, seed)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &sel.table {
                w.serialize(SelectionLine {
                    features: row.features.join(" "),
                    accuracy: row.accuracy,
                    selected: row.selected,
                })
                .map_err(CliError::runtime)?;
            }
            selection_csv = Some(String::from_utf8(w.into_inner().map_err(CliError::runtime)?).map_err(CliError::runtime)?);
            for (row, set) in sel.table.iter().zip(&sel.sets) {
                if row.selected {
                    candidate_sets.push(set.clone());
                }
            }
            sel.best.map_or_else(|| individual_features(space), |b| sel.sets[b].clone())
        }
        FeaturePolicy::SumSubsets if cumulative => {
            let mut f = individual_features(space);
            for set in enumerate_sum_features(space)? {
                if set.len() == 1 {
                    f.extend(set);
                }
            }
            f
        }
        _ => individual_features(space),
    };

    let mut rng = stream(seed, "learn");
    let ruleset = learn_ruleset(&data, &features, &cfg.ripper, &mut rng).map_err(CliError::runtime)?;
    let mut fail = extract_fail_rules(&ruleset);
    for (k, set) in candidate_sets.iter().enumerate() {
        if *set == features {
            continue;
        }
        let mut r = stream(seed, &format!("learn/extra-{k}"));
        if let Ok(rs) = learn_ruleset(&data, set, &cfg.ripper, &mut r) {
            fail.extend(extract_fail_rules(&rs));
        }
    }
    let fail_rules = minimize_rules(&fail, space)?;

    create_dir(&cfg.out)?;
    let refs = subject.references();
    let rules_json = cfg.out.join("rules.json");
    write(&rules_json, &ruleset.to_json())?;
    let mut text = ruleset.render(&refs);
    text.push_str("\n# Fail rules with 100% confidence, minimized\n");
    for r in &fail_rules {
        let _ = writeln!(text, "{}  [support {}]", r.render(&refs), r.support);
    }
    write(&cfg.out.join("rules.txt"), &text)?;
    let fail_json = serde_json::to_string_pretty(&fail_rules).map_err(CliError::runtime)?;
    write(&cfg.out.join("fail_rules.json"), &fail_json)?;
    if let Some(table) = selection_csv {
        write(&cfg.out.join("selection.csv"), &table)?;
    }
    Ok(Learned { ruleset, fail_rules, rules_json })
}

pub enum ModelFile<'a> {
    Rules(&'a Path),
    Tree(&'a Path),
}

fn load_classifier(model: &ModelFile, subject: &dyn Subject) -> CliResult<Box<dyn Classifier>> {
    match model {
        ModelFile::Rules(p) => {
            let rs = RuleSet::from_json(&read(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            rs.check_space(subject.space())?;
            Ok(Box::new(rs))
        }
        ModelFile::Tree(p) => {
            let tree: ClassTree =
                serde_json::from_str(&read(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let width = failscope::space::Encoder::new(subject.space()).width();
            let bad = tree.nodes().iter().any(|n| matches!(n, failscope::models::tree::Node::Split { feature, .. } if *feature >= width));
            if bad {
                return Err(CliError::Config(format!("{}: tree does not fit the subject's inputs", p.display())));
            }
            Ok(Box::new(TreeClassifier::new(tree, subject.space())))
        }
    }
}

/// Score a rules or tree file against fresh inputs labelled by the subject.
pub fn cmd_evaluate(cfg: &RunConfig, model: ModelFile, n_tests: usize) -> CliResult<MetricReport> {
    if n_tests == 0 {
        return Err(CliError::Config("n_tests must be positive".into()));
    }
    cfg.validate()?;
    let subject = cfg.subject()?;
    let classifier = load_classifier(&model, subject.as_ref())?;
    let mut rng = stream(cfg.seeds[0], &format!("evaluate/{}", subject.name()));
    let test = labelled_test_set(subject.as_ref(), n_tests, &mut rng)?;
    let report = evaluate_model(classifier.as_ref(), &test)?;
    create_dir(&cfg.out)?;
    let json = serde_json::to_string_pretty(&report).map_err(CliError::runtime)?;
    write(&cfg.out.join("metrics.json"), &json)?;
    Ok(report)
}

pub fn load_plan(path: &Path) -> CliResult<ExperimentPlan> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Run an experiment plan; writes `report.json` and `report.md`.
pub fn cmd_compare(plan: &ExperimentPlan, out: &Path) -> CliResult<ExperimentReport> {
    plan.validate()?;
    plan.resolve_subjects()?;
    let report = run_experiment(plan)?;
    create_dir(out)?;
    write(&out.join("report.json"), &report.to_json())?;
    write(&out.join("report.md"), &report.markdown())?;
    if report.failed_runs() == report.runs.len() {
        return Err(CliError::Runtime(format!("all {} runs failed", report.runs.len())));
    }
    Ok(report)
}

pub fn cmd_subjects() -> String {
    let mut out = String::from("name\tvariables\texec_cost\tcumulative\n");
    for s in failscope::builtin_catalog().iter() {
        let vars: Vec<String> = s
            .space()
            .variables()
            .iter()
            .map(|v| match v.bounds() {
                Some((lo, hi)) => format!("{}[{lo},{hi}]", v.name),
                None => format!("{}{{{}}}", v.name, v.cardinality().unwrap_or(0)),
            })
            .collect();
        let _ = writeln!(out, "{}\t{}\t{}\t{}", s.name(), vars.join(" "), s.exec_cost(), s.cumulative_inputs());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectFront {
    pub subject: String,
    pub points: Vec<ParetoPoint>,
    pub front: Vec<ParetoPoint>,
}

/// Recompute Pareto fronts from a report's per-strategy medians.
pub fn cmd_pareto(report_path: &Path, out: Option<&Path>) -> CliResult<(Vec<SubjectFront>, String)> {
    let report: ExperimentReport = serde_json::from_str(&read(report_path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", report_path.display())))?;
    let mut fronts = Vec::new();
    let mut md = String::new();
    for s in &report.subjects {
        let points: Vec<ParetoPoint> = s
            .strategies
            .iter()
            .filter_map(|st| Some(ParetoPoint::new(st.strategy.clone(), st.median_mislabels?, st.median_dataset_size?)))
            .collect();
        let front = pareto_front(&points);
        let _ = writeln!(md, "## {}\n\n| strategy | errors | dataset size |\n|---|---:|---:|", s.subject);
        for p in &front {
            let _ = writeln!(md, "| {} | {} | {} |", p.algorithm, p.errors, p.dataset_size);
        }
        md.push('\n');
        fronts.push(SubjectFront { subject: s.subject.clone(), points, front });
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        let json = serde_json::to_string_pretty(&fronts).map_err(CliError::runtime)?;
        write(&dir.join("pareto.json"), &json)?;
        write(&dir.join("pareto.md"), &md)?;
    }
    Ok((fronts, md))
}
