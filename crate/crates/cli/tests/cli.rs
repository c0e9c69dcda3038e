use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use failscope::rules::{Feature, Op, Predicate, Rule, RuleSet};
use failscope::{SubjectRegistry, Verdict};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_failscope"));
    c.env_remove("FAILSCOPE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_json(dir: &Path, name: &str, v: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn small_config(dir: &Path, subject: &str, strategy: &str) -> PathBuf {
    write_json(
        dir,
        "config.json",
        serde_json::json!({
            "subject": subject,
            "generator": {"strategy": strategy, "sampler": {"initial_dataset_size": 40}},
            "budget": {"max_executions": 60},
            "seeds": [3],
        }),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_one_row_per_execution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "sum_cap", "RS");
    let out = dir.path().join("out");
    let o = run(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = out.join("sum_cap_RS_seed3.csv");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("class1,"));
    assert!(header.ends_with("fitness,verdict,source"));
    assert_eq!(lines.count(), 60);
    assert!(out.join("sum_cap_RS_seed3.trace.jsonl").exists());
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "band", "SA_DYN");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["generate", "--config", s(&cfg), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["band_SA_DYN_seed3.csv", "band_SA_DYN_seed3.trace.jsonl"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn seed_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "band", "RS");
    let out = dir.path().join("out");
    let o = bin()
        .args(["generate", "--config", s(&cfg), "--out", s(&out), "--seed", "9"])
        .env("FAILSCOPE_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("band_RS_seed9.csv").exists());
    let o = bin()
        .args(["generate", "--config", s(&cfg), "--out", s(&out)])
        .env("FAILSCOPE_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("band_RS_seed4.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["generate", "--subject", "no_such_subject", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("error:"));
    assert!(!out.exists(), "nothing is written before validation");

    let o = run(&["generate", "--strategy", "SIDEWAYS", "--out", s(&out)]);
    assert_eq!(code(&o), 2);

    let bad = write_json(dir.path(), "bad.json", serde_json::json!({"subjekt": "band"}));
    let o = run(&["generate", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&o), 2);

    let o = run(&["generate", "--config", s(&dir.path().join("missing.json")), "--out", s(&out)]);
    assert_eq!(code(&o), 2);

    let o = bin().args(["generate", "--out", s(&out)]).env("FAILSCOPE_SEED", "abc").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn learn_recovers_a_sum_rule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(
        dir.path(),
        "config.json",
        serde_json::json!({
            "subject": "sum_cap",
            "generator": {"strategy": "RS"},
            "budget": {"max_executions": 400},
            "preprocessing_share": 0.5,
            "seeds": [1],
        }),
    );
    let out = dir.path().join("out");
    let o = run(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ds = out.join("sum_cap_RS_seed1.csv");
    let o = run(&["learn", "--config", s(&cfg), "--out", s(&out), "--dataset", s(&ds), "--features", "auto-select"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("selection.csv").exists());
    assert!(out.join("rules.txt").exists());
    let fail: Vec<Rule> = serde_json::from_str(&fs::read_to_string(out.join("fail_rules.json")).unwrap()).unwrap();
    assert!(!fail.is_empty());
    assert!(fail.iter().all(|r| r.prediction == Verdict::Fail && r.is_certain()));
    assert!(
        fail.iter().any(|r| r.condition.iter().any(|p| p.feature.is_sum())),
        "no sum feature among {fail:?}"
    );

    // the written rules load back unchanged
    let text = fs::read_to_string(out.join("rules.json")).unwrap();
    let rs = RuleSet::from_json(&text).unwrap();
    assert_eq!(rs.to_json(), text);
}

#[test]
fn learn_rejects_single_class_data() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("one.csv");
    let mut text = String::from("v1,v2,fitness,verdict,source\n");
    for k in 0..6 {
        text.push_str(&format!("{k}.5,{k}.25,1.0e0,pass,executed\n"));
    }
    fs::write(&ds, text).unwrap();
    let out = dir.path().join("out");
    let o = run(&["learn", "--subject", "band", "--out", s(&out), "--dataset", s(&ds)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let o = run(&["learn", "--subject", "sum_cap", "--out", s(&out), "--dataset", s(&ds)]);
    assert_eq!(code(&o), 2, "header does not match the subject");
}

fn exact_sum_cap_rules() -> RuleSet {
    let subject = SubjectRegistry::default().build("sum_cap", &serde_json::Value::Null).unwrap();
    let space = subject.space();
    let f = Feature::sum(space, &[4, 5, 6], None).unwrap();
    let rule = Rule::new(vec![Predicate { feature: f.clone(), op: Op::Gt, constant: 12.0 }], Verdict::Fail);
    RuleSet { rules: vec![rule], default: Verdict::Pass, features: vec![f] }
}

#[test]
fn evaluate_scores_rules_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.json");
    fs::write(&rules, exact_sum_cap_rules().to_json()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["evaluate", "--subject", "sum_cap", "--seed", "5", "--out", s(out), "--rules", s(&rules), "--n-tests", "3000"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let ma = fs::read_to_string(a.join("metrics.json")).unwrap();
    assert_eq!(ma, fs::read_to_string(b.join("metrics.json")).unwrap());
    let m: serde_json::Value = serde_json::from_str(&ma).unwrap();
    assert!(m["accuracy"].as_f64().unwrap() >= 0.99, "{m}");
    assert_eq!(m["tp"].as_u64().unwrap() + m["fp"].as_u64().unwrap() + m["fn"].as_u64().unwrap() + m["tn"].as_u64().unwrap(), 3000);

    let o = run(&["evaluate", "--subject", "sum_cap", "--out", s(&a), "--rules", s(&rules), "--n-tests", "0"]);
    assert_eq!(code(&o), 2);

    // rules over eight variables do not fit a two-variable subject
    let o = run(&["evaluate", "--subject", "band", "--out", s(&a), "--rules", s(&rules)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn evaluate_reads_generated_trees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "band", "SOTA");
    let out = dir.path().join("out");
    let o = run(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let tree = out.join("band_SOTA_seed3.tree.json");
    assert!(tree.exists());
    let o = run(&["evaluate", "--config", s(&cfg), "--out", s(&out), "--tree", s(&tree), "--n-tests", "500"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(m["accuracy"].as_f64().unwrap() > 0.5);
}

#[test]
fn compare_rejects_empty_plans() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_json(dir.path(), "plan.json", serde_json::json!({"subjects": [], "strategies": ["RS"], "seeds": [0]}));
    let o = run(&["compare", "--plan", s(&plan), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let plan = write_json(dir.path(), "plan2.json", serde_json::json!({"subjects": ["band"], "strategies": ["RS"], "seeds": []}));
    let o = run(&["compare", "--plan", s(&plan), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn compare_then_pareto() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_json(
        dir.path(),
        "plan.json",
        serde_json::json!({
            "subjects": ["band", "threshold_mix"],
            "strategies": ["SA_DYN", "RS"],
            "seeds": [0, 1, 2],
            "budget": {"max_executions": 30},
            "test_set_size": 300,
        }),
    );
    let out = dir.path().join("out");
    let o = run(&["compare", "--plan", s(&plan), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 12);
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("Pareto front"));
    assert!(md.contains("## band") && md.contains("## threshold_mix"));

    let pout = dir.path().join("pareto");
    let o = run(&["pareto", "--report", s(&out.join("report.json")), "--out", s(&pout)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fronts: serde_json::Value = serde_json::from_str(&fs::read_to_string(pout.join("pareto.json")).unwrap()).unwrap();
    let fronts = fronts.as_array().unwrap();
    assert_eq!(fronts.len(), 2);
    for f in fronts {
        assert!(!f["front"].as_array().unwrap().is_empty());
    }
    let o = run(&["pareto", "--report", s(&dir.path().join("nope.json"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn subjects_lists_the_catalogue() {
    let o = run(&["subjects"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("name\t"));
    for name in ["sum_cap", "band", "threshold_mix", "xor_regions", "step_controller"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name}\t"))), "{name}");
    }
}
