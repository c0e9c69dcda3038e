//! Generation guided by a regression tree (range shrinking around the
//! leaves nearest the pass/fail boundary) or by a logistic model (inputs
//! closest to a target probability contour).

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::sota::path_box;
use super::{Action, GenerationResult, GeneratorConfig, Run};
use crate::budget::ExecutionBudget;
use crate::error::Result;
use crate::models::logistic::{fit_logistic_warm, logit, LogisticModel};
use crate::models::tree::LeafPath;
use crate::models::{fit_regression_tree, RegressionTree};
use crate::rng::Rng;
use crate::sampling::{generate_tests, sample_uniform};
use crate::space::{Encoder, InputSpace, TestInput, Value, VarKind, Verdict};
use crate::subjects::Subject;

/// Current sampling interval of every real variable; `None` for enumerated
/// variables, which are always sampled over all symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeBox {
    pub ranges: Vec<Option<(f64, f64)>>,
}

impl RangeBox {
    pub fn of(space: &InputSpace) -> Self {
        Self {
            ranges: space.variables().iter().map(|v| v.bounds()).collect(),
        }
    }

    pub fn sample(&self, space: &InputSpace, rng: &mut Rng) -> TestInput {
        TestInput(
            space
                .variables()
                .iter()
                .zip(&self.ranges)
                .map(|(v, r)| match (&v.kind, r) {
                    (VarKind::Real { .. }, Some((lo, hi))) => {
                        Value::Real(if lo < hi { rng.gen_range(*lo..=*hi) } else { *lo })
                    }
                    (VarKind::Enumerated { values }, _) => Value::Symbol(rng.gen_range(0..values.len())),
                    (VarKind::Real { lower, upper }, None) => Value::Real(rng.gen_range(*lower..=*upper)),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafChoice {
    /// Leaf with the smallest non-negative value.
    pub pass: LeafPath<f64>,
    /// Leaf with the largest negative value.
    pub fail: LeafPath<f64>,
}

fn closer(cand: &LeafPath<f64>, best: &Option<&LeafPath<f64>>, better: impl Fn(f64, f64) -> bool) -> bool {
    match best {
        None => true,
        Some(b) => {
            better(cand.value, b.value) || (cand.value == b.value && cand.steps.len() < b.steps.len())
        }
    }
}

/// The two leaves nearest zero from either side; ties prefer the shallower
/// and then the leftmost leaf.
pub fn choose_leaves(tree: &RegressionTree) -> Option<LeafChoice> {
    let paths = tree.paths();
    let mut pass: Option<&LeafPath<f64>> = None;
    let mut fail: Option<&LeafPath<f64>> = None;
    for p in &paths {
        if p.value >= 0.0 {
            if closer(p, &pass, |a, b| a < b) {
                pass = Some(p);
            }
        } else if closer(p, &fail, |a, b| a > b) {
            fail = Some(p);
        }
    }
    Some(LeafChoice {
        pass: pass?.clone(),
        fail: fail?.clone(),
    })
}

/// Candidate ranges from the boundary leaves of `tree`. Each bound constant
/// `c` on either path contributes `[c - m, c + m]` with `m = pct*|c|` (or
/// `pct` times the original width when `c = 0`); a variable's candidate is
/// the hull of its contributions, intersected with the original range, and
/// replaces the current range only when it is not wider.
pub fn shrink_ranges(
    tree: &RegressionTree,
    space: &InputSpace,
    original: &RangeBox,
    current: &RangeBox,
    margin_pct: f64,
) -> (RangeBox, Option<LeafChoice>) {
    let Some(choice) = choose_leaves(tree) else {
        return (current.clone(), None);
    };
    let enc = Encoder::new(space);
    let a = path_box(space, &enc, &choice.pass.steps);
    let b = path_box(space, &enc, &choice.fail.steps);
    let mut next = current.clone();
    for i in 0..space.len() {
        let (Some((olo, ohi)), Some((clo, chi))) = (original.ranges[i], current.ranges[i]) else {
            continue;
        };
        let consts: Vec<f64> = [a.lower[i], a.upper[i], b.lower[i], b.upper[i]]
            .into_iter()
            .flatten()
            .collect();
        if consts.is_empty() {
            continue;
        }
        let margin = |c: f64| {
            if c == 0.0 {
                margin_pct * (ohi - olo)
            } else {
                margin_pct * c.abs()
            }
        };
        let lo = consts.iter().map(|&c| c - margin(c)).fold(f64::INFINITY, f64::min).max(olo);
        let hi = consts.iter().map(|&c| c + margin(c)).fold(f64::NEG_INFINITY, f64::max).min(ohi);
        if lo <= hi && hi - lo <= chi - clo {
            next.ranges[i] = Some((lo, hi));
        }
    }
    (next, Some(choice))
}

pub fn run_rt_guided(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<GenerationResult> {
    let mut run = Run::start(subject, cfg, budget, rng)?;
    let space = subject.space().clone();
    let original = RangeBox::of(&space);
    let mut current = original.clone();
    while !budget.is_exhausted() && run.dataset.len() < cfg.max_rows {
        run.iteration += 1;
        if !run.overhead(budget, cfg.overhead.per_fit)? {
            break;
        }
        let tree = fit_regression_tree(&run.dataset, &cfg.rt_tree)?;
        let (next, choice) = shrink_ranges(&tree, &space, &original, &current, cfg.margin_pct);
        run.event(
            Action::ShrinkRange,
            json!({ "ranges": next.ranges, "opposite_leaves": choice.is_some() }),
        );
        current = next;
        let t = current.sample(&space, rng);
        if !run.execute(t, budget)? {
            break;
        }
    }
    Ok(run.finish(cfg.strategy.name(), None, None))
}

/// Distance of encoded input `x` to the contour `logit = target`, in the
/// model's raw feature units.
pub fn contour_distance(m: &LogisticModel, x: &[f64], target: f64) -> f64 {
    (m.logit(x) - target).abs() / m.coefficient_norm()
}

/// Index of the candidate closest to the contour; the first one wins ties.
pub fn closest_candidate(m: &LogisticModel, xs: &[Vec<f64>], target: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, x) in xs.iter().enumerate() {
        let d = contour_distance(m, x, target);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

pub fn run_lr_guided(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<GenerationResult> {
    let mut run = Run::start(subject, cfg, budget, rng)?;
    let space = subject.space().clone();
    let enc = Encoder::new(&space);
    let mut x: Vec<Vec<f64>> = run.dataset.rows().iter().map(|r| enc.encode(&r.input)).collect();
    let mut model: Option<LogisticModel> = None;
    while !budget.is_exhausted() && run.dataset.len() < cfg.max_rows {
        run.iteration += 1;
        let labels: Vec<Verdict> = run.dataset.rows().iter().map(|r| r.verdict()).collect();
        let passes = labels.iter().filter(|&&v| v == Verdict::Pass).count();
        let t = if passes == 0 || passes == labels.len() {
            sample_uniform(&space, rng)
        } else {
            if !run.overhead(budget, cfg.overhead.per_fit)? {
                break;
            }
            let m = fit_logistic_warm(&x, &labels, &cfg.logistic, model.as_ref())?;
            let p = (passes as f64 / labels.len() as f64).clamp(0.01, 0.99);
            let target = logit(p);
            let mut cands = generate_tests(&space, cfg.lr_candidates, rng);
            let i = if m.is_degenerate() {
                rng.gen_range(0..cands.len())
            } else {
                let xs = enc.encode_all(cands.iter());
                closest_candidate(&m, &xs, target)
            };
            run.event(
                Action::PickCandidate,
                json!({ "pass_fraction": p, "target_logit": target, "degenerate": m.is_degenerate() }),
            );
            model = Some(m);
            cands.swap_remove(i)
        };
        let row = enc.encode(&t);
        if !run.execute(t, budget)? {
            break;
        }
        x.push(row);
    }
    Ok(run.finish(cfg.strategy.name(), None, None))
}
