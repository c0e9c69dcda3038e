//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng as _;

use failscope::evaluation::{
    a12, pareto_front, run_experiment, wilcoxon_rank_sum, BudgetSpec, ExperimentPlan, ExperimentReport,
    ParetoPoint,
};
use failscope::generators::{
    generate, run_surrogate_loop, shrink_ranges, GeneratorConfig, ModelTrainer, OverheadModel, RangeBox, Strategy,
    SurrogateTrainer, Trained,
};
use failscope::models::tree::{Node, Tree};
use failscope::models::{logistic, ModelType, Regressor, RegressionTree, TrainedModel};
use failscope::rng::{stream, Rng};
use failscope::rules::{enumerate_sum_features, implies, Feature, FeatureKind, Op, Predicate, Rule};
use failscope::sampling::smote;
use failscope::{
    ExecutionBudget, InputSpace, InputVariable, LabeledDataset, Source, Subject, SubjectRegistry, TestInput, Value,
    Verdict,
};

const SUBJECTS: [&str; 5] = ["band", "step_controller", "sum_cap", "threshold_mix", "xor_regions"];
const SEEDS: u64 = 10;
const EXECUTIONS: usize = 40;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn subject(name: &str) -> Arc<dyn Subject> {
    SubjectRegistry::default().build(name, &serde_json::Value::Null).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

// ---------------------------------------------------------------------------
// 1. gating

#[derive(Debug)]
struct Constant(f64);

impl Regressor for Constant {
    fn predict(&self, _: &[f64]) -> f64 {
        self.0
    }
}

struct StubTrainer {
    fitness: f64,
    error: f64,
}

impl SurrogateTrainer for StubTrainer {
    fn train(&mut self, executed: &LabeledDataset, _: &mut Rng) -> failscope::Result<Trained> {
        let model = TrainedModel::from_parts(
            ModelType::GL,
            executed.space().clone(),
            Arc::new(Constant(self.fitness)),
            self.error,
            None,
        );
        Ok(Trained { model, errors: vec![] })
    }
    fn next_cost(&self, _: &OverheadModel) -> f64 {
        0.0
    }
}

/// Preprocessing takes `d` executions, then the loop makes exactly one decision.
fn one_gated_step(fitness: f64, error: f64) -> (Source, usize, usize) {
    let s = subject("band");
    let d = 8;
    let mut cfg = GeneratorConfig::default();
    cfg.sampler.initial_dataset_size = d;
    cfg.max_rows = d + 1;
    let mut budget = ExecutionBudget::executions(d + 1, s.exec_cost()).unwrap();
    let mut trainer = StubTrainer { fitness, error };
    let r = run_surrogate_loop(s.as_ref(), &cfg, &mut budget, &mut stream(1, "gate"), &mut trainer).unwrap();
    assert_eq!(r.dataset.len(), d + 1);
    let last = r.dataset.rows().last().unwrap();
    (last.source, budget.consumed_executions() - d, r.dataset.len())
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let (src_a, execs_a, _) = one_gated_step(8.0, 2.0);
    let (src_b, execs_b, _) = one_gated_step(-1.0, 2.0);
    let secs = t.elapsed().as_secs_f64();
    check(
        src_a == Source::Predicted && execs_a == 0 && src_b == Source::Executed && execs_b == 1 && secs < 1.0,
        format!("F=8,e=2 -> {src_a:?} with {execs_a} executions; F=-1,e=2 -> {src_b:?} with {execs_b} ({secs:.3}s)"),
    )
}

// ---------------------------------------------------------------------------
// 2. range reduction

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let leaf = |v: f64| Node::Leaf { value: v, samples: 1 };
    let split = |f: usize, c: f64, l: usize, r: usize| Node::Split { feature: f, threshold: c, left: l, right: r };
    let tree: RegressionTree = Tree::from_nodes(vec![
        split(0, 10.0, 1, 2),
        split(1, 20.0, 3, 4),
        leaf(-0.5),
        leaf(12.0),
        split(2, 5.0, 5, 6),
        leaf(0.8),
        leaf(-7.0),
    ])
    .unwrap();
    let space = InputSpace::new(vec![
        InputVariable::real("v1", 0.0, 20.0).unwrap(),
        InputVariable::real("v2", 10.0, 30.0).unwrap(),
        InputVariable::real("v3", 1.0, 7.0).unwrap(),
    ])
    .unwrap();
    let orig = RangeBox::of(&space);
    let (next, _) = shrink_ranges(&tree, &space, &orig, &orig, 0.05);
    let want = vec![Some((9.5, 10.5)), Some((19.0, 21.0)), Some((4.75, 5.25))];
    let secs = t.elapsed().as_secs_f64();
    check(next.ranges == want && secs < 1.0, format!("ranges {:?} ({secs:.3}s)", next.ranges))
}

// ---------------------------------------------------------------------------
// shared experiment for 3, 4, 6 and 8

fn main_plan() -> ExperimentPlan {
    ExperimentPlan {
        subjects: SUBJECTS.map(String::from).to_vec(),
        strategies: Strategy::all(),
        seeds: (0..SEEDS).collect(),
        budget: BudgetSpec { max_executions: EXECUTIONS, ..BudgetSpec::default() },
        test_set_size: 10_000,
        ..ExperimentPlan::default()
    }
}

fn strategy_summary<'a>(
    list: &'a [failscope::evaluation::StrategySummary],
    name: &str,
) -> &'a failscope::evaluation::StrategySummary {
    list.iter().find(|s| s.strategy == name).unwrap()
}

fn criterion_3(rep: &ExperimentReport) -> Outcome {
    let family: BTreeSet<String> = Strategy::surrogate_family().iter().map(|s| s.name()).collect();
    assert_eq!(family.len(), 8);
    let mut hits = 0;
    let mut detail = Vec::new();
    for s in &rep.subjects {
        let points: Vec<ParetoPoint> =
            s.pareto_points.iter().filter(|p| family.contains(&p.algorithm)).cloned().collect();
        let on_front = pareto_front(&points).iter().any(|p| p.algorithm == "SA_DYN");
        hits += usize::from(on_front);
        detail.push(format!("{} {}", s.subject, if on_front { "yes" } else { "no" }));
    }
    check(hits >= 4, format!("SA_DYN on front for {hits}/5 subjects ({})", detail.join(", ")))
}

fn run_accuracies(rep: &ExperimentReport, strategy: &str) -> Vec<f64> {
    rep.runs
        .iter()
        .filter(|r| r.strategy == strategy)
        .map(|r| r.metrics.as_ref().map_or(0.0, |m| m.rules.accuracy))
        .collect()
}

fn criterion_4(rep: &ExperimentReport) -> Outcome {
    let acc = |n: &str| strategy_summary(&rep.suite.strategies, n).mean_accuracy.unwrap_or(0.0);
    let (dyn_, rs, rt, lr) = (acc("SA_DYN"), acc("RS"), acc("RT_GUIDED"), acc("LR_GUIDED"));
    let p = wilcoxon_rank_sum(&run_accuracies(rep, "SA_DYN"), &run_accuracies(rep, "RS")).unwrap();
    check(
        dyn_ >= rs + 0.05 && dyn_ >= rt && dyn_ >= lr && p < 0.05,
        format!("mean accuracy SA_DYN {dyn_:.4}, RS {rs:.4}, RT_GUIDED {rt:.4}, LR_GUIDED {lr:.4}; p = {p:.2e}"),
    )
}

fn is_cap_rule(p: &Predicate, q: &[usize], cap: f64) -> bool {
    let FeatureKind::SumOfSubset { indices, weights } = &p.feature.kind else {
        return false;
    };
    let unit = weights.as_ref().is_none_or(|w| w.iter().all(|&x| x == 1.0));
    let mut idx = indices.clone();
    idx.sort_unstable();
    unit && idx == q && p.op.is_lower_bound() && ((p.constant - cap) / cap).abs() <= 0.10
}

fn criterion_6(rep: &ExperimentReport) -> Outcome {
    let s = subject("sum_cap");
    let params = s.params();
    let cap = params["cap"].as_f64().unwrap();
    let mut q: Vec<usize> = serde_json::from_value(params["subset"].clone()).unwrap();
    q.sort_unstable();
    let runs: Vec<_> = rep.runs.iter().filter(|r| r.subject == "sum_cap" && r.strategy == "SA_DYN").collect();
    let mut recovered = 0;
    let mut accs = Vec::new();
    for r in &runs {
        let Some(m) = &r.metrics else {
            accs.push(0.0);
            continue;
        };
        assert_eq!(m.rules.total(), 10_000);
        accs.push(m.rules.accuracy);
        let found = m
            .fail_rules
            .iter()
            .any(|rule| rule.prediction == Verdict::Fail && rule.is_certain() && rule.condition.iter().any(|p| is_cap_rule(p, &q, cap)));
        recovered += usize::from(found);
    }
    let med = median(accs);
    let sets = enumerate_sum_features(s.space()).unwrap().len();
    check(
        recovered * 2 > runs.len() && med >= 0.9 && sets == 248,
        format!(
            "cap rule recovered in {recovered}/{} seeds; median accuracy {med:.4} on 10^4 inputs; {sets} feature sets",
            runs.len()
        ),
    )
}

fn criterion_8(rep: &ExperimentReport) -> Outcome {
    let mut wins = 0;
    let mut detail = Vec::new();
    for s in &rep.subjects {
        let t = |n: &str| strategy_summary(&s.strategies, n).mean_tree_accuracy.unwrap_or(0.0);
        let (d, sota) = (t("SA_DYN"), t("SOTA"));
        wins += usize::from(d >= sota);
        detail.push(format!("{} {d:.3}/{sota:.3}", s.subject));
    }
    check(wins >= 3, format!("SA_DYN trees >= SOTA tree on {wins}/5 subjects ({})", detail.join(", ")))
}

// ---------------------------------------------------------------------------
// 5. dataset size under costly executions

fn criterion_5() -> Outcome {
    let overhead = OverheadModel::default();
    let types = ModelType::SURROGATES.to_vec();
    let trials = GeneratorConfig::default().tuning_trials;

    // wall-clock cost of one full round (tuning included) on a dataset
    // larger than any the runs below train on
    let probe = subject("band");
    let mut cfg = GeneratorConfig::default();
    cfg.sampler.initial_dataset_size = 200;
    let mut b = ExecutionBudget::executions(200, probe.exec_cost()).unwrap();
    let data = generate(probe.as_ref(), &cfg, &mut b, &mut stream(0, "probe")).unwrap().executed;
    let mut trainer = ModelTrainer::new(types.clone(), trials, true, probe.fitness_range());
    let simulated_round = trainer.next_cost(&overhead);
    let fits = simulated_round / overhead.per_fit;
    let t = Instant::now();
    trainer.train(&data, &mut stream(0, "probe/train")).unwrap();
    let wall_round = t.elapsed().as_secs_f64();
    let wall_per_fit = wall_round / fits;
    if wall_per_fit > overhead.per_fit {
        return Err(format!("precondition: measured {wall_per_fit:.4}s per fit exceeds the simulated {}s", overhead.per_fit));
    }

    let plan = ExperimentPlan { budget: BudgetSpec { max_executions: EXECUTIONS, ..BudgetSpec::default() }, ..main_plan() };
    let mut sizes = [Vec::new(), Vec::new()];
    let mut min_cost = f64::INFINITY;
    for name in SUBJECTS {
        let s = subject(name);
        let exec_cost = s.exec_cost().max(100.0 * simulated_round);
        min_cost = min_cost.min(exec_cost);
        let spec = BudgetSpec { exec_cost: Some(exec_cost), ..plan.budget.clone() };
        for (k, strategy) in [Strategy::SaDyn(types.clone()), Strategy::Rs].into_iter().enumerate() {
            let gcfg = plan.generator_for(strategy).unwrap();
            for seed in 0..SEEDS {
                let mut budget = spec.for_subject(s.as_ref()).unwrap();
                let r = generate(s.as_ref(), &gcfg, &mut budget, &mut stream(seed, &format!("generate/{name}"))).unwrap();
                sizes[k].push(r.dataset.len() as f64);
            }
        }
    }
    let [dyn_, rs] = sizes.map(median);
    check(
        min_cost >= 100.0 * wall_round && dyn_ > 1.33 * rs,
        format!(
            "median size SA_DYN {dyn_} vs RS {rs} (ratio {:.2}); exec cost >= {min_cost:.0}s vs measured round {wall_round:.3}s",
            dyn_ / rs
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. oracle suites

fn oracle_pareto() -> Result<(), String> {
    let mut rng = stream(7, "oracle/pareto");
    for set in 0..100 {
        let n = rng.gen_range(1..40);
        let pts: Vec<ParetoPoint> = (0..n)
            .map(|i| ParetoPoint::new(format!("p{i}"), rng.gen_range(0..8) as f64, rng.gen_range(0..8) as f64))
            .collect();
        let brute: Vec<String> = pts
            .iter()
            .filter(|p| {
                !pts.iter().any(|q| {
                    q.errors <= p.errors
                        && q.dataset_size >= p.dataset_size
                        && (q.errors < p.errors || q.dataset_size > p.dataset_size)
                })
            })
            .map(|p| p.algorithm.clone())
            .collect();
        let got: Vec<String> = pareto_front(&pts).into_iter().map(|p| p.algorithm).collect();
        if got != brute {
            return Err(format!("pareto set {set}: {got:?} != {brute:?}"));
        }
    }
    Ok(())
}

fn random_predicate(space: &InputSpace, rng: &mut Rng) -> Predicate {
    let feature = if rng.gen_bool(0.2) {
        Feature::sum(space, &[0, 1], None).unwrap()
    } else {
        Feature::var(space, rng.gen_range(0..3)).unwrap()
    };
    let hi = if feature.is_sum() { 20.0 } else { 10.0 };
    let op = [Op::Le, Op::Gt, Op::Ge, Op::Lt][rng.gen_range(0..4)];
    Predicate { feature, op, constant: rng.gen_range(0.0..hi) }
}

fn oracle_implies() -> Result<(), String> {
    let space = InputSpace::new((1..=3).map(|i| InputVariable::real(format!("x{i}"), 0.0, 10.0).unwrap()).collect()).unwrap();
    let mut rng = stream(7, "oracle/implies");
    let mut accepted = 0;
    for pair in 0..100 {
        let b: Vec<Predicate> = (0..rng.gen_range(1..4)).map(|_| random_predicate(&space, &mut rng)).collect();
        // half of the pairs derive `a` from `b` by dropping and loosening
        let a: Vec<Predicate> = if pair % 2 == 0 {
            let mut a = Vec::new();
            for p in &b {
                if rng.gen_bool(0.7) {
                    let shift = rng.gen_range(-0.5..2.0);
                    let constant = if p.op.is_lower_bound() { p.constant - shift } else { p.constant + shift };
                    a.push(Predicate { constant, ..p.clone() });
                }
            }
            a
        } else {
            (0..rng.gen_range(1..3)).map(|_| random_predicate(&space, &mut rng)).collect()
        };
        let (ra, rb) = (Rule::new(a, Verdict::Fail), Rule::new(b, Verdict::Fail));
        if !implies(&ra, &rb, &space).map_err(|e| e.to_string())? {
            continue;
        }
        accepted += 1;
        // sample inside b's variable box, then keep points that satisfy b
        let mut lo = [0.0f64; 3];
        let mut hi = [10.0f64; 3];
        for p in &rb.condition {
            if let FeatureKind::Var { index } = p.feature.kind {
                if p.op.is_lower_bound() {
                    lo[index] = lo[index].max(p.constant);
                } else {
                    hi[index] = hi[index].min(p.constant);
                }
            }
        }
        if (0..3).any(|i| lo[i] > hi[i]) {
            continue;
        }
        for _ in 0..10_000 {
            let t = TestInput((0..3).map(|i| Value::Real(if lo[i] < hi[i] { rng.gen_range(lo[i]..=hi[i]) } else { lo[i] })).collect());
            if rb.matches(&t) && !ra.matches(&t) {
                return Err(format!("pair {pair}: {} does not imply {} at {t:?}", rb, ra));
            }
        }
    }
    if accepted < 20 {
        return Err(format!("only {accepted} implications accepted"));
    }
    Ok(())
}

fn oracle_wilcoxon() -> Result<(), String> {
    let mut rng = stream(7, "oracle/wilcoxon");
    for case in 0..300 {
        let n1 = rng.gen_range(3..=6);
        let n2 = rng.gen_range(3..=12 - n1);
        let n = n1 + n2;
        let pooled: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        // doubled mid-ranks by counting
        let rank2: Vec<i64> = pooled
            .iter()
            .map(|x| {
                let less = pooled.iter().filter(|y| *y < x).count() as i64;
                let eq = pooled.iter().filter(|y| *y == x).count() as i64;
                2 * less + eq + 1
            })
            .collect();
        let centre = (n1 * (n + 1)) as i64;
        let stat = |mask: u32| -> i64 { (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rank2[i]).sum::<i64>() - centre };
        let observed = stat((1u32 << n1) - 1).abs();
        let (mut extreme, mut total) = (0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == n1 {
                total += 1;
                extreme += u64::from(stat(mask).abs() >= observed);
            }
        }
        let want = extreme as f64 / total as f64;
        let got = wilcoxon_rank_sum(&pooled[..n1], &pooled[n1..]).map_err(|e| e.to_string())?;
        if (got - want).abs() > 1e-12 {
            return Err(format!("wilcoxon case {case}: {got} != {want}"));
        }
    }
    Ok(())
}

fn oracle_a12() -> Result<(), String> {
    let x = [0.3, 1.5, 2.0, 2.0, 9.1];
    let same = a12(&x, &x).map_err(|e| e.to_string())?;
    let split = a12(&[5.0, 6.0, 7.0], &[1.0, 2.0]).map_err(|e| e.to_string())?;
    if same != 0.5 || split != 1.0 {
        return Err(format!("a12(x,x) = {same}, separated = {split}"));
    }
    Ok(())
}

fn oracle_smote() -> Result<(), String> {
    let space = InputSpace::new(vec![
        InputVariable::real("a", 0.0, 10.0).unwrap(),
        InputVariable::real("b", -5.0, 5.0).unwrap(),
        InputVariable::enumerated("m", ["p", "q", "r"]).unwrap(),
    ])
    .unwrap();
    let mut rng = stream(7, "oracle/smote");
    let k = 3;
    let minority: Vec<TestInput> = (0..12)
        .map(|_| {
            TestInput(vec![
                Value::Real(rng.gen_range(0.0..10.0)),
                Value::Real(rng.gen_range(-5.0..5.0)),
                Value::Symbol(rng.gen_range(0..3)),
            ])
        })
        .collect();
    let coords = |t: &TestInput| -> [f64; 2] {
        match (&t.0[0], &t.0[1]) {
            (Value::Real(a), Value::Real(b)) => [*a / 10.0, (*b + 5.0) / 10.0],
            _ => unreachable!(),
        }
    };
    let pts: Vec<[f64; 2]> = minority.iter().map(coords).collect();
    let dist = |p: &[f64; 2], q: &[f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let knn: Vec<Vec<usize>> = (0..pts.len())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..pts.len()).filter(|&j| j != i).map(|j| (dist(&pts[i], &pts[j]), j)).collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let synth = smote(&space, &minority, k, 1000, &mut rng).map_err(|e| e.to_string())?;
    if synth.len() != 1000 {
        return Err(format!("{} synthetics", synth.len()));
    }
    for (n, s) in synth.iter().enumerate() {
        let sp = coords(s);
        let on_segment = (0..pts.len()).any(|i| {
            s.0[2] == minority[i].0[2]
                && knn[i].iter().any(|&j| {
                    let (b, e) = (pts[i], pts[j]);
                    let axis = if (e[0] - b[0]).abs() >= (e[1] - b[1]).abs() { 0 } else { 1 };
                    let u = (sp[axis] - b[axis]) / (e[axis] - b[axis]);
                    (-1e-9..=1.0 + 1e-9).contains(&u)
                        && (0..2).all(|d| (b[d] + u * (e[d] - b[d]) - sp[d]).abs() <= 1e-9)
                })
        });
        if !on_segment {
            return Err(format!("synthetic {n} {s:?} lies on no neighbour segment"));
        }
    }
    Ok(())
}

fn oracle_logistic_gradient() -> Result<(), String> {
    let mut rng = stream(7, "oracle/logistic");
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let dim = rng.gen_range(1..5);
        let z: Vec<Vec<f64>> = (0..30).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = (0..30).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect();
        let w: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda = rng.gen_range(0.0..0.5);
        let (_, g) = logistic::objective(&z, &y, &w, lambda);
        let h = 1e-5;
        for j in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let fd = (logistic::objective(&z, &y, &wp, lambda).0 - logistic::objective(&z, &y, &wm, lambda).0) / (2.0 * h);
            worst = worst.max((fd - g[j]).abs());
        }
    }
    if worst > 1e-4 {
        return Err(format!("gradient differs from finite differences by {worst:e}"));
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let suites: [(&str, fn() -> Result<(), String>); 6] = [
        ("pareto", oracle_pareto),
        ("subsumption", oracle_implies),
        ("wilcoxon", oracle_wilcoxon),
        ("a12", oracle_a12),
        ("smote", oracle_smote),
        ("logistic gradient", oracle_logistic_gradient),
    ];
    let mut failed = Vec::new();
    for (name, f) in suites {
        if let Err(e) = f() {
            failed.push(format!("{name}: {e}"));
        }
    }
    check(failed.is_empty(), if failed.is_empty() { "all six oracle suites agree".into() } else { failed.join("; ") })
}

// ---------------------------------------------------------------------------
// 9. determinism of the command-line tool

fn cli(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_failscope"))
        .env_remove("FAILSCOPE_SEED")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn cli_session(dir: &Path) -> Result<(), String> {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    fs::write(
        dir.join("config.json"),
        r#"{"subject": "sum_cap", "generator": {"strategy": "SA_DYN"}, "budget": {"max_executions": 40}, "preprocessing_share": 0.5, "seeds": [11]}"#,
    )
    .unwrap();
    fs::write(
        dir.join("plan.json"),
        r#"{"subjects": ["band", "xor_regions"], "strategies": ["SA_DYN", "SOTA", "RS"], "seeds": [0, 1, 2], "budget": {"max_executions": 30}, "test_set_size": 500}"#,
    )
    .unwrap();
    let (cfg, out) = (p("config.json"), p("out"));
    cli(&["generate", "--config", &cfg, "--out", &out])?;
    let ds = format!("{out}/sum_cap_SA_DYN_seed11.csv");
    cli(&["learn", "--config", &cfg, "--out", &out, "--dataset", &ds, "--features", "auto-select"])?;
    cli(&["evaluate", "--config", &cfg, "--out", &out, "--rules", &format!("{out}/rules.json")])?;
    cli(&["compare", "--plan", &p("plan.json"), "--out", &p("cmp")])?;
    cli(&["pareto", "--report", &format!("{}/report.json", p("cmp")), "--out", &p("cmp")])?;
    Ok(())
}

fn tree_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cli_session(a.path())?;
    cli_session(b.path())?;
    let (fa, fb) = (tree_files(a.path()), tree_files(b.path()));
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    check(
        fa.len() == fb.len() && differing.is_empty(),
        format!("{} files from generate/learn/evaluate/compare/pareto; differing: {differing:?}", fa.len()),
    )
}

// ---------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome + std::panic::UnwindSafe) -> Outcome {
    std::panic::catch_unwind(f).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn timed(results: &mut Vec<(u32, Outcome)>, n: u32, f: &dyn Fn() -> Outcome) {
    let t = Instant::now();
    let r = guarded(std::panic::AssertUnwindSafe(f));
    let secs = t.elapsed().as_secs_f64();
    let (tag, text) = match &r {
        Ok(s) => ("PASS", s),
        Err(s) => ("FAIL", s),
    };
    println!("{tag} criterion {n}: {text} [{secs:.1}s]");
    results.push((n, r));
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    timed(&mut results, 1, &criterion_1);
    timed(&mut results, 2, &criterion_2);
    timed(&mut results, 7, &criterion_7);
    timed(&mut results, 9, &criterion_9);

    let t = Instant::now();
    let report = run_experiment(&main_plan());
    let secs = t.elapsed().as_secs_f64();
    println!("shared experiment: 5 subjects x 12 strategies x {SEEDS} seeds in {secs:.1}s");
    match &report {
        Ok(rep) => {
            let failed = rep.failed_runs();
            if failed > 0 {
                println!("note: {failed} runs failed");
            }
            timed(&mut results, 3, &|| criterion_3(rep));
            timed(&mut results, 4, &|| criterion_4(rep));
            timed(&mut results, 6, &|| criterion_6(rep));
            timed(&mut results, 8, &|| criterion_8(rep));
        }
        Err(e) => {
            for n in [3, 4, 6, 8] {
                let msg = format!("shared experiment failed: {e}");
                println!("FAIL criterion {n}: {msg}");
                results.push((n, Err(msg)));
            }
        }
    }
    timed(&mut results, 5, &criterion_5);

    let failed: Vec<u32> = results.iter().filter(|r| r.1.is_err()).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
