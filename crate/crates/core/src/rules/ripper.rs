//! Sequential-covering rule learner in the RIPPER family.
//!
//! For each class (minority first) rules are grown greedily by FOIL gain on
//! a grow split, pruned on the held-out prune split, and added until the
//! description length runs away, no positives remain, or a pruned rule is
//! worse than chance on the prune split.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::space::Verdict;

use super::feature::{Feature, Op, Predicate};
use super::{Binarized, Rule, RuleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RipperParams {
    /// Share of the uncovered rows used for growing.
    pub grow_fraction: f64,
    /// Bits a ruleset may exceed the shortest description seen so far.
    pub mdl_budget: f64,
    /// Minimum positives a grown rule must cover.
    pub min_coverage: usize,
    pub max_conditions: usize,
    /// A pruned rule below this prune-split precision ends the class.
    pub min_precision: f64,
    /// Run the replacement/revision pass after the initial rules.
    pub optimize: bool,
}

impl Default for RipperParams {
    fn default() -> Self {
        Self {
            grow_fraction: 2.0 / 3.0,
            mdl_budget: 64.0,
            min_coverage: 2,
            max_conditions: 12,
            min_precision: 0.5,
            optimize: false,
        }
    }
}

impl RipperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.grow_fraction > 0.0 && self.grow_fraction < 1.0) {
            return Err(Error::Config("grow_fraction must lie in (0, 1)".into()));
        }
        if !(self.mdl_budget >= 0.0) {
            return Err(Error::Config("mdl_budget must be non-negative".into()));
        }
        if self.min_coverage == 0 || self.max_conditions == 0 {
            return Err(Error::Config("min_coverage and max_conditions must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.min_precision) {
            return Err(Error::Config("min_precision must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A condition on a column of the feature matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cond {
    col: usize,
    op: Op,
    c: f64,
}

impl Cond {
    fn holds(&self, x: &[f64]) -> bool {
        self.op.holds(x[self.col], self.c)
    }
}

fn covers(rule: &[Cond], x: &[f64]) -> bool {
    rule.iter().all(|c| c.holds(x))
}

struct Data<'a> {
    x: &'a [Vec<f64>],
    pos: Vec<bool>,
}

impl Data<'_> {
    fn counts(&self, rows: &[usize]) -> (usize, usize) {
        let p = rows.iter().filter(|&&i| self.pos[i]).count();
        (p, rows.len() - p)
    }
}

fn log2(x: f64) -> f64 {
    x.log2()
}

/// Bits to pick `k` of `t` items with success probability `p`.
fn subset_dl(t: f64, k: f64, p: f64) -> f64 {
    let mut dl = 0.0;
    if k > 0.0 {
        dl -= k * log2(p);
    }
    if k < t {
        dl -= (t - k) * log2(1.0 - p);
    }
    dl
}

fn theory_dl(k: usize, n_conditions: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    let mut dl = log2(k);
    if k > 1.0 {
        dl += 2.0 * log2(dl);
    }
    dl += subset_dl(n_conditions, k, k / n_conditions);
    0.5 * dl
}

fn data_dl(exp_fp_over_err: f64, cover: f64, uncover: f64, fp: f64, fn_: f64) -> f64 {
    let total = log2(cover + uncover + 1.0);
    let (cover_bits, uncover_bits);
    if cover > uncover {
        let exp_err = exp_fp_over_err * (fp + fn_);
        cover_bits = subset_dl(cover, fp, (exp_err / cover).clamp(f64::MIN_POSITIVE, 1.0 - 1e-12));
        uncover_bits = if uncover > 0.0 { subset_dl(uncover, fn_, fn_ / uncover) } else { 0.0 };
    } else {
        let exp_err = (1.0 - exp_fp_over_err) * (fp + fn_);
        cover_bits = if cover > 0.0 { subset_dl(cover, fp, fp / cover) } else { 0.0 };
        uncover_bits = subset_dl(uncover, fn_, (exp_err / uncover).clamp(f64::MIN_POSITIVE, 1.0 - 1e-12));
    }
    total + cover_bits + uncover_bits
}

/// Description length of a rule list over `rows`.
fn ruleset_dl(data: &Data, rules: &[Vec<Cond>], rows: &[usize], n_conditions: f64, exp: f64) -> f64 {
    let theory: f64 = rules.iter().map(|r| theory_dl(r.len(), n_conditions)).sum();
    let (mut cover, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for &i in rows {
        let hit = rules.iter().any(|r| covers(r, &data.x[i]));
        if hit {
            cover += 1.0;
            if !data.pos[i] {
                fp += 1.0;
            }
        } else if data.pos[i] {
            fn_ += 1.0;
        }
    }
    let uncover = rows.len() as f64 - cover;
    theory + data_dl(exp, cover, uncover, fp, fn_)
}

fn split_grow_prune(data: &Data, rows: &[usize], frac: f64, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let (mut grow, mut prune) = (Vec::new(), Vec::new());
    for want in [true, false] {
        let mut class: Vec<usize> = rows.iter().copied().filter(|&i| data.pos[i] == want).collect();
        class.shuffle(rng);
        let n_grow = ((class.len() as f64) * frac).round() as usize;
        let n_grow = if class.is_empty() { 0 } else { n_grow.clamp(1, class.len()) };
        grow.extend_from_slice(&class[..n_grow]);
        prune.extend_from_slice(&class[n_grow..]);
    }
    grow.sort_unstable();
    prune.sort_unstable();
    (grow, prune)
}

fn foil_gain(p0: f64, n0: f64, p1: f64, n1: f64) -> f64 {
    if p1 == 0.0 {
        return f64::NEG_INFINITY;
    }
    p1 * (log2(p1 / (p1 + n1)) - log2(p0 / (p0 + n0)))
}

/// Best single condition on `rows` by FOIL gain. Ties go to the lowest
/// column, then `≤` before `>`, then the lowest threshold.
fn best_condition(data: &Data, rows: &[usize], min_cov: usize) -> Option<(Cond, f64)> {
    let (p0, n0) = data.counts(rows);
    let (p0f, n0f) = (p0 as f64, n0 as f64);
    let n_cols = data.x.first().map_or(0, Vec::len);
    let mut best: Option<(Cond, f64)> = None;
    let mut order: Vec<usize> = rows.to_vec();
    for col in 0..n_cols {
        order.sort_by(|&a, &b| data.x[a][col].total_cmp(&data.x[b][col]));
        let mut candidates: Vec<(Cond, f64)> = Vec::new();
        let (mut pl, mut nl) = (0usize, 0usize);
        for k in 0..order.len() {
            let i = order[k];
            if data.pos[i] {
                pl += 1;
            } else {
                nl += 1;
            }
            let Some(&next) = order.get(k + 1) else { break };
            let (v, w) = (data.x[i][col], data.x[next][col]);
            if v == w {
                continue;
            }
            let mut c = v + (w - v) / 2.0;
            if c >= w {
                c = v;
            }
            let (pr, nr) = (p0 - pl, n0 - nl);
            if pl >= min_cov {
                candidates.push((Cond { col, op: Op::Le, c }, foil_gain(p0f, n0f, pl as f64, nl as f64)));
            }
            if pr >= min_cov {
                candidates.push((Cond { col, op: Op::Gt, c }, foil_gain(p0f, n0f, pr as f64, nr as f64)));
            }
        }
        // Le candidates are generated in ascending threshold order, and so are
        // Gt; a stable sort by op puts all Le first.
        candidates.sort_by_key(|(c, _)| matches!(c.op, Op::Gt));
        for (cond, gain) in candidates {
            if gain > 0.0 && best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((cond, gain));
            }
        }
    }
    best
}

fn grow_rule(data: &Data, grow: &[usize], start: Vec<Cond>, params: &RipperParams) -> Vec<Cond> {
    let mut rule = start;
    let mut covered: Vec<usize> = grow.iter().copied().filter(|&i| covers(&rule, &data.x[i])).collect();
    while rule.len() < params.max_conditions {
        let (_, n) = data.counts(&covered);
        if n == 0 {
            break;
        }
        let Some((cond, _)) = best_condition(data, &covered, params.min_coverage) else { break };
        rule.push(cond);
        covered.retain(|&i| cond.holds(&data.x[i]));
    }
    rule
}

fn prune_value(p: usize, n: usize) -> f64 {
    if p + n == 0 {
        -1.0
    } else {
        (p as f64 - n as f64) / (p + n) as f64
    }
}

/// Keep the prefix with the best `(p − n)/(p + n)` on the prune rows; ties
/// go to the longer prefix.
fn prune_rule(data: &Data, prune: &[usize], rule: Vec<Cond>) -> Vec<Cond> {
    if prune.is_empty() || rule.is_empty() {
        return rule;
    }
    let mut covered: Vec<usize> = prune.to_vec();
    let mut best = (f64::NEG_INFINITY, rule.len());
    for (k, cond) in rule.iter().enumerate() {
        covered.retain(|&i| cond.holds(&data.x[i]));
        let (p, n) = data.counts(&covered);
        let v = prune_value(p, n);
        if v >= best.0 {
            best = (v, k + 1);
        }
    }
    rule[..best.1].to_vec()
}

fn precision(data: &Data, rows: &[usize], rule: &[Cond]) -> Option<f64> {
    let hit: Vec<usize> = rows.iter().copied().filter(|&i| covers(rule, &data.x[i])).collect();
    if hit.is_empty() {
        return None;
    }
    let (p, _) = data.counts(&hit);
    Some(p as f64 / hit.len() as f64)
}

fn n_conditions(x: &[Vec<f64>], rows: &[usize]) -> f64 {
    let n_cols = x.first().map_or(0, Vec::len);
    let mut total = 0usize;
    for col in 0..n_cols {
        let mut vals: Vec<f64> = rows.iter().map(|&i| x[i][col]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        total += 2 * vals.len().saturating_sub(1);
    }
    total.max(1) as f64
}

/// Rules for the positive class of `data` over `rows`.
fn learn_class(data: &Data, rows: &[usize], params: &RipperParams, rng: &mut Rng) -> Vec<Vec<Cond>> {
    let n_cond = n_conditions(data.x, rows);
    let (p_all, _) = data.counts(rows);
    let exp = if rows.is_empty() { 0.5 } else { (p_all as f64 / rows.len() as f64).clamp(1e-6, 1.0 - 1e-6) };
    let mut rules: Vec<Vec<Cond>> = Vec::new();
    let mut remaining: Vec<usize> = rows.to_vec();
    let mut min_dl = ruleset_dl(data, &rules, rows, n_cond, exp);
    loop {
        let (p, _) = data.counts(&remaining);
        if p == 0 {
            break;
        }
        let (grow, prune) = split_grow_prune(data, &remaining, params.grow_fraction, rng);
        let grown = grow_rule(data, &grow, Vec::new(), params);
        let rule = prune_rule(data, &prune, grown);
        if rule.is_empty() {
            break;
        }
        let prec = precision(data, &prune, &rule).or_else(|| precision(data, &grow, &rule));
        if prec.is_none_or(|x| x < params.min_precision) {
            break;
        }
        rules.push(rule);
        let dl = ruleset_dl(data, &rules, rows, n_cond, exp);
        if dl > min_dl + params.mdl_budget {
            rules.pop();
            break;
        }
        min_dl = min_dl.min(dl);
        let before = remaining.len();
        let last = rules.last().expect("just pushed");
        remaining.retain(|&i| !covers(last, &data.x[i]));
        if remaining.len() == before {
            break;
        }
    }
    if params.optimize {
        optimize(data, rows, &mut rules, params, n_cond, exp, rng);
    }
    // drop rules whose removal does not lengthen the description
    let mut i = rules.len();
    while i > 0 {
        i -= 1;
        let with = ruleset_dl(data, &rules, rows, n_cond, exp);
        let mut without = rules.clone();
        without.remove(i);
        if ruleset_dl(data, &without, rows, n_cond, exp) < with {
            rules = without;
        }
    }
    rules
}

/// One replacement/revision pass: each rule is regrown from scratch and
/// extended from its current form; the variant with the shortest
/// description of the whole rule list is kept.
fn optimize(
    data: &Data,
    rows: &[usize],
    rules: &mut [Vec<Cond>],
    params: &RipperParams,
    n_cond: f64,
    exp: f64,
    rng: &mut Rng,
) {
    for i in 0..rules.len() {
        let others: Vec<Vec<Cond>> =
            rules.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r.clone()).collect();
        let free: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| !others.iter().any(|o| covers(o, &data.x[r])))
            .collect();
        if data.counts(&free).0 == 0 {
            continue;
        }
        let (grow, prune) = split_grow_prune(data, &free, params.grow_fraction, rng);
        let replacement = prune_rule(data, &prune, grow_rule(data, &grow, Vec::new(), params));
        let revision = prune_rule(data, &prune, grow_rule(data, &grow, rules[i].clone(), params));
        let mut best = (ruleset_dl(data, rules, rows, n_cond, exp), rules[i].clone());
        for cand in [replacement, revision] {
            if cand.is_empty() {
                continue;
            }
            let mut trial = rules.to_vec();
            trial[i] = cand.clone();
            let dl = ruleset_dl(data, &trial, rows, n_cond, exp);
            if dl < best.0 {
                best = (dl, cand);
            }
        }
        rules[i] = best.1;
    }
}

/// Keep only the tightest bound per (column, operator); order of first
/// appearance is preserved.
fn tighten(cond: &[Cond]) -> Vec<Cond> {
    let mut out: Vec<Cond> = Vec::with_capacity(cond.len());
    for c in cond {
        match out.iter_mut().find(|o| o.col == c.col && o.op == c.op) {
            Some(o) if c.op.is_lower_bound() => o.c = o.c.max(c.c),
            Some(o) => o.c = o.c.min(c.c),
            None => out.push(*c),
        }
    }
    out
}

fn to_rule(cond: &[Cond], features: &[Feature], prediction: Verdict, train: &Binarized) -> Rule {
    let condition = tighten(cond)
        .iter()
        .map(|c| Predicate { feature: features[c.col].clone(), op: c.op, constant: c.c })
        .collect();
    let mut r = Rule::new(condition, prediction);
    r.measure(train);
    r
}

/// Learn an ordered ruleset over `features`.
///
/// The minority class is learned first and its rules come first in the
/// list. Rules for the other class are learned over all rows, so that their
/// confidence does not depend on the rules before them. The default is the
/// majority label among rows no rule covers.
pub fn learn_ruleset(
    train: &Binarized,
    features: &[Feature],
    params: &RipperParams,
    rng: &mut Rng,
) -> Result<RuleSet> {
    params.validate()?;
    if features.is_empty() {
        return Err(Error::InvalidInput("empty feature set".into()));
    }
    if features.iter().any(|f| f.max_index() >= train.space.len()) {
        return Err(Error::SpaceMismatch("feature refers to a variable outside the space".into()));
    }
    let (n_pass, n_fail) = train.counts();
    if n_pass == 0 || n_fail == 0 {
        return Err(Error::SingleClass);
    }
    let x: Vec<Vec<f64>> = train
        .inputs
        .iter()
        .map(|t| features.iter().map(|f| f.value(t)).collect())
        .collect();
    let first = if n_fail <= n_pass { Verdict::Fail } else { Verdict::Pass };
    let all: Vec<usize> = (0..train.len()).collect();

    let data = Data { x: &x, pos: train.labels.iter().map(|l| *l == first).collect() };
    let first_rules = learn_class(&data, &all, params, rng);
    let second = first.flip();
    let data2 = Data { x: &x, pos: train.labels.iter().map(|l| *l == second).collect() };
    let second_rules = learn_class(&data2, &all, params, rng);

    let uncovered: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&i| !first_rules.iter().chain(&second_rules).any(|r| covers(r, &x[i])))
        .collect();
    let (up, uf) = uncovered.iter().fold((0, 0), |(p, f), &i| match train.labels[i] {
        Verdict::Pass => (p + 1, f),
        Verdict::Fail => (p, f + 1),
    });
    let default = if uncovered.is_empty() {
        if n_fail > n_pass { Verdict::Fail } else { Verdict::Pass }
    } else if uf > up {
        Verdict::Fail
    } else {
        Verdict::Pass
    };

    let mut rules: Vec<Rule> = first_rules.iter().map(|c| to_rule(c, features, first, train)).collect();
    rules.extend(second_rules.iter().map(|c| to_rule(c, features, second, train)));
    Ok(RuleSet { rules, default, features: features.to_vec() })
}
