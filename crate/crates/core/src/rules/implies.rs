//! Implication between rule conditions by interval reasoning.

use crate::error::{Error, Result};
use crate::space::InputSpace;

use super::feature::{Op, Predicate};
use super::Rule;

#[derive(Debug, Clone, Copy)]
struct Bound {
    value: f64,
    open: bool,
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: Bound,
    hi: Bound,
}

impl Interval {
    fn closed(lo: f64, hi: f64) -> Self {
        Self { lo: Bound { value: lo, open: false }, hi: Bound { value: hi, open: false } }
    }

    fn unbounded() -> Self {
        Self::closed(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn tighten(&mut self, op: Op, c: f64) {
        let b = Bound { value: c, open: matches!(op, Op::Gt | Op::Lt) };
        if op.is_lower_bound() {
            if c > self.lo.value || (c == self.lo.value && b.open) {
                self.lo = b;
            }
        } else if c < self.hi.value || (c == self.hi.value && b.open) {
            self.hi = b;
        }
    }

    fn is_empty(&self) -> bool {
        self.lo.value > self.hi.value || (self.lo.value == self.hi.value && (self.lo.open || self.hi.open))
    }

    /// Whether every value in the interval satisfies `x op c`.
    fn entails(&self, op: Op, c: f64) -> bool {
        match op {
            Op::Gt => self.lo.value > c || (self.lo.value == c && self.lo.open),
            Op::Ge => self.lo.value >= c,
            Op::Lt => self.hi.value < c || (self.hi.value == c && self.hi.open),
            Op::Le => self.hi.value <= c,
        }
    }
}

fn domain(space: &InputSpace, i: usize) -> Interval {
    let v = &space.variables()[i];
    match (v.bounds(), v.cardinality()) {
        (Some((lo, hi)), _) => Interval::closed(lo, hi),
        (None, Some(k)) => Interval::closed(0.0, k.saturating_sub(1) as f64),
        _ => Interval::unbounded(),
    }
}

type Form = Vec<(usize, f64)>;

/// The feasible region of a conjunction: a box plus bounds on sum forms.
struct Region {
    vars: Vec<Interval>,
    forms: Vec<(Form, Interval)>,
}

impl Region {
    fn of(space: &InputSpace, cond: &[Predicate]) -> Self {
        let mut vars: Vec<Interval> = (0..space.len()).map(|i| domain(space, i)).collect();
        let mut forms: Vec<(Form, Interval)> = Vec::new();
        for p in cond {
            let form = p.feature.linear_form();
            if let [(i, w)] = form[..] {
                if w == 1.0 {
                    vars[i].tighten(p.op, p.constant);
                    continue;
                }
            }
            match forms.iter_mut().find(|(f, _)| *f == form) {
                Some((_, iv)) => iv.tighten(p.op, p.constant),
                None => {
                    let mut iv = Interval::unbounded();
                    iv.tighten(p.op, p.constant);
                    forms.push((form, iv));
                }
            }
        }
        Self { vars, forms }
    }

    fn is_empty(&self) -> bool {
        self.vars.iter().any(Interval::is_empty) || self.forms.iter().any(|(_, iv)| iv.is_empty())
    }

    /// Range of a linear form over the box. The sum is accumulated in the
    /// same order the feature evaluates it, so float rounding (monotone)
    /// cannot produce a value outside the computed range.
    fn range_over_box(&self, form: &Form) -> Interval {
        let (mut lo, mut hi) = (Bound { value: 0.0, open: false }, Bound { value: 0.0, open: false });
        for &(i, w) in form {
            let iv = self.vars[i];
            let (a, b) = if w >= 0.0 { (iv.lo, iv.hi) } else { (iv.hi, iv.lo) };
            lo = Bound { value: lo.value + w * a.value, open: lo.open || (a.open && w != 0.0) };
            hi = Bound { value: hi.value + w * b.value, open: hi.open || (b.open && w != 0.0) };
        }
        Interval { lo, hi }
    }

    fn entails(&self, p: &Predicate) -> bool {
        let form = p.feature.linear_form();
        if let [(i, w)] = form[..] {
            if w == 1.0 {
                return self.vars[i].entails(p.op, p.constant);
            }
        }
        if self.forms.iter().any(|(f, iv)| *f == form && iv.entails(p.op, p.constant)) {
            return true;
        }
        self.range_over_box(&form).entails(p.op, p.constant)
    }
}

fn check(rule: &Rule, space: &InputSpace) -> Result<()> {
    if rule.condition.iter().any(|p| p.feature.max_index() >= space.len()) {
        return Err(Error::SpaceMismatch("rule refers to a variable outside the space".into()));
    }
    Ok(())
}

/// True when every input satisfying `b`'s condition satisfies `a`'s.
/// Sound but incomplete: sum constraints do not propagate into variable bounds.
pub fn implies(a: &Rule, b: &Rule, space: &InputSpace) -> Result<bool> {
    check(a, space)?;
    check(b, space)?;
    let region = Region::of(space, &b.condition);
    if region.is_empty() {
        return Ok(true);
    }
    Ok(a.condition.iter().all(|p| region.entails(p)))
}

/// Drop rules implied by another kept rule. Candidates are considered by
/// descending support (ties by position); survivors keep their input order.
pub fn minimize_rules(rules: &[Rule], space: &InputSpace) -> Result<Vec<Rule>> {
    for r in rules {
        check(r, space)?;
    }
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.sort_by(|&x, &y| rules[y].support.cmp(&rules[x].support).then(x.cmp(&y)));
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let mut subsumed = false;
        for &k in &kept {
            if implies(&rules[k], &rules[i], space)? {
                subsumed = true;
                break;
            }
        }
        if !subsumed {
            kept.push(i);
        }
    }
    // a later, more general rule can still subsume an earlier kept one
    loop {
        let mut drop = None;
        'outer: for &x in &kept {
            for &y in &kept {
                if x != y && implies(&rules[y], &rules[x], space)? {
                    drop = Some(x);
                    break 'outer;
                }
            }
        }
        match drop {
            Some(x) => kept.retain(|&k| k != x),
            None => break,
        }
    }
    kept.sort_unstable();
    Ok(kept.into_iter().map(|i| rules[i].clone()).collect())
}
