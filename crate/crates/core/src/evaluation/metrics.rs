//! Confusion-matrix metrics with Fail as the positive class, and dataset
//! mislabel counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::GenerationResult;
use crate::models::ClassTree;
use crate::rules::RuleSet;
use crate::space::{Encoder, InputSpace, Source, TestInput, Verdict};
use crate::subjects::{evaluate_unbudgeted, Subject};

pub trait Classifier {
    fn classify(&self, t: &TestInput) -> Verdict;
}

impl Classifier for RuleSet {
    fn classify(&self, t: &TestInput) -> Verdict {
        self.apply(t)
    }
}

/// A classification tree bound to the encoding of its input space.
#[derive(Debug, Clone)]
pub struct TreeClassifier {
    tree: ClassTree,
    encoder: Encoder,
}

impl TreeClassifier {
    pub fn new(tree: ClassTree, space: &InputSpace) -> Self {
        Self { tree, encoder: Encoder::new(space) }
    }

    pub fn tree(&self) -> &ClassTree {
        &self.tree
    }
}

impl Classifier for TreeClassifier {
    fn classify(&self, t: &TestInput) -> Verdict {
        self.tree.predict(&self.encoder.encode(t)).verdict
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_fail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_fail: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl MetricReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Result<Self> {
        let total = tp + fp + fn_ + tn;
        if total == 0 {
            return Err(Error::EmptySamples);
        }
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        Ok(Self {
            accuracy: (tp + tn) as f64 / total as f64,
            precision_fail: ratio(tp, tp + fp),
            recall_fail: ratio(tp, tp + fn_),
            tp,
            fp,
            fn_,
            tn,
        })
    }

    /// From `(predicted, actual)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Verdict, Verdict)>) -> Result<Self> {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (p, a) in pairs {
            match (p, a) {
                (Verdict::Fail, Verdict::Fail) => tp += 1,
                (Verdict::Fail, Verdict::Pass) => fp += 1,
                (Verdict::Pass, Verdict::Fail) => fn_ += 1,
                (Verdict::Pass, Verdict::Pass) => tn += 1,
            }
        }
        Self::from_counts(tp, fp, fn_, tn)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn evaluate_model(model: &dyn Classifier, test_set: &[(TestInput, Verdict)]) -> Result<MetricReport> {
    if test_set.is_empty() {
        return Err(Error::EmptySamples);
    }
    MetricReport::from_pairs(test_set.iter().map(|(t, v)| (model.classify(t), *v)))
}

/// Predicted rows whose verdict differs from the subject's actual verdict.
/// Re-executes the subject outside any budget.
pub fn mislabel_count(result: &GenerationResult, subject: &dyn Subject) -> Result<usize> {
    let mut n = 0;
    for row in result.dataset.rows() {
        if row.source == Source::Predicted
            && row.verdict() != evaluate_unbudgeted(subject, &row.input)?.verdict()
        {
            n += 1;
        }
    }
    Ok(n)
}
