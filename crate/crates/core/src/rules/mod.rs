//! Failure models as ordered IF-condition-THEN-verdict rules.
//!
//! Rules are learned by a sequential-covering learner ([`learn_ruleset`]) over
//! engineered [`Feature`]s. Fail rules that hold without exception on the
//! training data can be extracted and minimized under logical implication.

mod feature;
mod implies;
mod ripper;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{InputSpace, LabeledDataset, TestInput, Verdict};

pub use feature::{
    enumerate_sum_features, individual_features, Feature, FeatureKind, Op, Predicate, MAX_SUBSET_VARS,
};
pub use implies::{implies, minimize_rules};
pub use ripper::{learn_ruleset, RipperParams};

pub const SCHEMA_VERSION: u32 = 1;

/// A binarized dataset: inputs with pass/fail labels, fitness kept alongside.
#[derive(Debug, Clone)]
pub struct Binarized {
    pub space: InputSpace,
    pub inputs: Vec<TestInput>,
    pub labels: Vec<Verdict>,
    pub fitness: Vec<Option<f64>>,
}

impl Binarized {
    pub fn from_labels(space: InputSpace, inputs: Vec<TestInput>, labels: Vec<Verdict>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::InvalidInput("one label per input".into()));
        }
        for t in &inputs {
            space.check(t)?;
        }
        let fitness = vec![None; inputs.len()];
        Ok(Self { space, inputs, labels, fitness })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(pass, fail)`
    pub fn counts(&self) -> (usize, usize) {
        let fail = self.labels.iter().filter(|v| **v == Verdict::Fail).count();
        (self.len() - fail, fail)
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            space: self.space.clone(),
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            fitness: idx.iter().map(|&i| self.fitness[i]).collect(),
        }
    }
}

pub fn binarize(ds: &LabeledDataset) -> Binarized {
    let rows = ds.rows();
    Binarized {
        space: ds.space().clone(),
        inputs: rows.iter().map(|r| r.input.clone()).collect(),
        labels: rows.iter().map(|r| r.verdict()).collect(),
        fitness: rows.iter().map(|r| Some(r.fitness.0)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub condition: Vec<Predicate>,
    pub prediction: Verdict,
    pub confidence: f64,
    pub support: usize,
    /// Matching rows whose label equals the prediction.
    pub correct: usize,
}

impl Rule {
    pub fn new(condition: Vec<Predicate>, prediction: Verdict) -> Self {
        Self { condition, prediction, confidence: 0.0, support: 0, correct: 0 }
    }

    pub fn matches(&self, t: &TestInput) -> bool {
        self.condition.iter().all(|p| p.holds(t))
    }

    /// Recompute support and confidence on `data`.
    pub fn measure(&mut self, data: &Binarized) {
        let (mut support, mut correct) = (0, 0);
        for (t, l) in data.inputs.iter().zip(&data.labels) {
            if self.matches(t) {
                support += 1;
                if *l == self.prediction {
                    correct += 1;
                }
            }
        }
        self.support = support;
        self.correct = correct;
        self.confidence = if support == 0 { 0.0 } else { correct as f64 / support as f64 };
    }

    /// Exact 100% confidence on the training counts.
    pub fn is_certain(&self) -> bool {
        self.support > 0 && self.correct == self.support
    }

    fn max_index(&self) -> Option<usize> {
        self.condition.iter().map(|p| p.feature.max_index()).max()
    }

    /// Text form, rendering constants on referenced variables as a
    /// percentage of the reference (`x ≥ 91%·limit`).
    pub fn render(&self, references: &[(usize, String, f64)]) -> String {
        let cond = if self.condition.is_empty() {
            "TRUE".to_string()
        } else {
            self.condition
                .iter()
                .map(|p| render_predicate(p, references))
                .collect::<Vec<_>>()
                .join(" ∧ ")
        };
        format!("IF {cond} THEN {}", self.prediction.to_string().to_uppercase())
    }
}

fn render_predicate(p: &Predicate, references: &[(usize, String, f64)]) -> String {
    if let FeatureKind::Var { index } = p.feature.kind {
        if let Some((_, name, value)) = references.iter().find(|r| r.0 == index) {
            if *value != 0.0 {
                let pct = (p.constant / value * 100.0).round();
                return format!("{} {} {}%·{}", p.feature.name, p.op.symbol(), pct, name);
            }
        }
    }
    p.to_string()
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&[]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub default: Verdict,
    /// The feature set the rules were learned over.
    pub features: Vec<Feature>,
}

impl RuleSet {
    /// First matching rule's prediction, else the default.
    pub fn apply(&self, t: &TestInput) -> Verdict {
        self.rules
            .iter()
            .find(|r| r.matches(t))
            .map_or(self.default, |r| r.prediction)
    }

    pub fn check_space(&self, space: &InputSpace) -> Result<()> {
        let bad = self
            .features
            .iter()
            .map(|f| f.max_index())
            .chain(self.rules.iter().filter_map(|r| r.max_index()))
            .any(|i| i >= space.len());
        if bad {
            return Err(Error::SpaceMismatch("rule refers to a variable outside the space".into()));
        }
        Ok(())
    }

    pub fn render(&self, references: &[(usize, String, f64)]) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.render(references));
            out.push_str(&format!(
                "  [support {}, confidence {:.4}]\n",
                r.support, r.confidence
            ));
        }
        out.push_str(&format!("ELSE {}\n", self.default.to_string().to_uppercase()));
        out
    }

    pub fn to_json(&self) -> String {
        let doc = RulesDocument { schema_version: SCHEMA_VERSION, ruleset: self.clone() };
        serde_json::to_string_pretty(&doc).expect("rules serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RulesDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("rules document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported rules schema version {}",
                doc.schema_version
            )));
        }
        Ok(doc.ruleset)
    }
}

#[derive(Serialize, Deserialize)]
struct RulesDocument {
    schema_version: u32,
    #[serde(flatten)]
    ruleset: RuleSet,
}

/// Fail rules with exact 100% training confidence, in ruleset order.
pub fn extract_fail_rules(rs: &RuleSet) -> Vec<Rule> {
    rs.rules
        .iter()
        .filter(|r| r.prediction == Verdict::Fail && r.is_certain())
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Fitness, LabeledRow, Source};

    fn space() -> InputSpace {
        InputSpace::uniform_reals("v", 2, 0.0, 10.0).unwrap()
    }

    fn pred(i: usize, op: Op, c: f64) -> Predicate {
        Predicate { feature: Feature::var(&space(), i).unwrap(), op, constant: c }
    }

    fn rule(preds: Vec<Predicate>, prediction: Verdict, correct: usize, support: usize) -> Rule {
        Rule {
            condition: preds,
            prediction,
            confidence: correct as f64 / support as f64,
            support,
            correct,
        }
    }

    #[test]
    fn binarize_labels_by_sign() {
        let mut ds = LabeledDataset::new(space());
        for f in [3.2, -0.01, 0.0] {
            ds.push(LabeledRow { input: TestInput::reals([1.0, 1.0]), fitness: Fitness(f), source: Source::Executed })
                .unwrap();
        }
        let b = binarize(&ds);
        assert_eq!(b.labels, [Verdict::Pass, Verdict::Fail, Verdict::Pass]);
        assert_eq!(b.counts(), (2, 1));
        assert_eq!(b.fitness[1], Some(-0.01));
    }

    #[test]
    fn first_match_semantics() {
        let rs = RuleSet {
            rules: vec![
                rule(vec![pred(0, Op::Gt, 5.0)], Verdict::Fail, 1, 1),
                rule(vec![pred(0, Op::Gt, 3.0)], Verdict::Pass, 1, 1),
            ],
            default: Verdict::Pass,
            features: individual_features(&space()),
        };
        assert_eq!(rs.apply(&TestInput::reals([6.0, 0.0])), Verdict::Fail);
        assert_eq!(rs.apply(&TestInput::reals([4.0, 0.0])), Verdict::Pass);
        assert_eq!(rs.apply(&TestInput::reals([1.0, 0.0])), Verdict::Pass);
    }

    #[test]
    fn extraction_filters_exact_confidence() {
        let rs = RuleSet {
            rules: vec![
                rule(vec![pred(0, Op::Gt, 5.0)], Verdict::Fail, 10, 10),
                rule(vec![pred(1, Op::Gt, 5.0)], Verdict::Fail, 93, 100),
                rule(vec![pred(1, Op::Le, 1.0)], Verdict::Pass, 4, 4),
                rule(vec![pred(1, Op::Le, 2.0)], Verdict::Fail, 3, 3),
            ],
            default: Verdict::Pass,
            features: individual_features(&space()),
        };
        let got = extract_fail_rules(&rs);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0], rs.rules[0]);
        assert_eq!(got[1], rs.rules[3]);
        let none = RuleSet { rules: vec![rs.rules[2].clone()], ..rs };
        assert!(extract_fail_rules(&none).is_empty());
    }

    #[test]
    fn measure_matches_definition() {
        let data = Binarized::from_labels(
            space(),
            vec![
                TestInput::reals([6.0, 0.0]),
                TestInput::reals([7.0, 0.0]),
                TestInput::reals([8.0, 0.0]),
                TestInput::reals([1.0, 0.0]),
            ],
            vec![Verdict::Fail, Verdict::Fail, Verdict::Pass, Verdict::Fail],
        )
        .unwrap();
        let mut r = Rule::new(vec![pred(0, Op::Gt, 5.0)], Verdict::Fail);
        r.measure(&data);
        assert_eq!((r.support, r.correct), (3, 2));
        assert!(!r.is_certain());
        assert!((r.confidence - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rendering() {
        let r = rule(vec![pred(0, Op::Ge, 9.1), pred(1, Op::Le, 2.5)], Verdict::Fail, 1, 1);
        assert_eq!(r.to_string(), "IF v1 ≥ 9.1 ∧ v2 ≤ 2.5 THEN FAIL");
        let refs = vec![(0, "thresh1".to_string(), 10.0)];
        assert_eq!(r.render(&refs), "IF v1 ≥ 91%·thresh1 ∧ v2 ≤ 2.5 THEN FAIL");
    }

    #[test]
    fn json_roundtrip_and_version() {
        let s = space();
        let rs = RuleSet {
            rules: vec![rule(
                vec![Predicate { feature: Feature::sum(&s, &[0, 1], None).unwrap(), op: Op::Gt, constant: 0.1 + 0.2 }],
                Verdict::Fail,
                7,
                7,
            )],
            default: Verdict::Pass,
            features: individual_features(&s),
        };
        let text = rs.to_json();
        assert!(text.contains("\"schema_version\": 1"));
        assert_eq!(RuleSet::from_json(&text).unwrap(), rs);
        let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(RuleSet::from_json(&bumped).is_err());
    }

    #[test]
    fn space_check() {
        let rs = RuleSet { rules: vec![], default: Verdict::Pass, features: individual_features(&space()) };
        assert!(rs.check_space(&space()).is_ok());
        let small = InputSpace::uniform_reals("v", 1, 0.0, 1.0).unwrap();
        assert!(matches!(rs.check_space(&small), Err(Error::SpaceMismatch(_))));
    }
}
