//! Decision-tree-driven generation: fit a classification tree, then sample
//! inside the region of every root-to-leaf path.

use rand::Rng as _;
use serde_json::json;

use super::{Action, GenerationResult, GeneratorConfig, Run};
use crate::budget::ExecutionBudget;
use crate::error::{Error, Result};
use crate::models::fit_class_tree;
use crate::models::tree::PathStep;
use crate::rng::Rng;
use crate::space::{Encoder, InputSpace, TestInput, Value, VarKind};
use crate::subjects::Subject;

/// Region of one tree path. Real variable `i` satisfies
/// `lower[i] < v <= upper[i]` (missing bounds are unconstrained);
/// enumerated variables take a symbol from `allowed[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBox {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub allowed: Vec<Option<Vec<bool>>>,
}

/// Simplify path predicates to one lower and one upper bound per variable.
pub fn path_box(space: &InputSpace, enc: &Encoder, steps: &[PathStep]) -> PathBox {
    let n = space.len();
    let mut b = PathBox {
        lower: vec![None; n],
        upper: vec![None; n],
        allowed: space
            .variables()
            .iter()
            .map(|v| v.cardinality().map(|k| vec![true; k]))
            .collect(),
    };
    for s in steps {
        let var = enc.column_var[s.feature];
        match enc.column_symbol[s.feature] {
            None if s.le => {
                b.upper[var] = Some(b.upper[var].map_or(s.threshold, |u: f64| u.min(s.threshold)));
            }
            None => {
                b.lower[var] = Some(b.lower[var].map_or(s.threshold, |l: f64| l.max(s.threshold)));
            }
            Some(sym) => {
                let allowed = b.allowed[var].as_mut().expect("one-hot column of an enumerated variable");
                let holds = |x: f64| if s.le { x <= s.threshold } else { x > s.threshold };
                let (keep_one, keep_zero) = (holds(1.0), holds(0.0));
                for (k, a) in allowed.iter_mut().enumerate() {
                    let ok = if k == sym { keep_one } else { keep_zero };
                    *a = *a && ok;
                }
            }
        }
    }
    b
}

/// Uniform draw from the intersection of `b` with the space.
pub fn sample_in_box(space: &InputSpace, b: &PathBox, rng: &mut Rng) -> Result<TestInput> {
    let mut vals = Vec::with_capacity(space.len());
    for (i, v) in space.variables().iter().enumerate() {
        match &v.kind {
            VarKind::Real { lower, upper } => {
                let lo = b.lower[i].map_or(*lower, |l| l.max(*lower));
                let hi = b.upper[i].map_or(*upper, |u| u.min(*upper));
                let strict = b.lower[i].is_some_and(|l| l >= *lower);
                if lo > hi || (strict && lo >= hi) {
                    return Err(Error::InvalidInput(format!("empty path region for {}", v.name)));
                }
                let mut x = rng.gen_range(lo..=hi);
                let mut tries = 0;
                while strict && x <= lo {
                    tries += 1;
                    x = if tries < 100 { rng.gen_range(lo..=hi) } else { 0.5 * (lo + hi) };
                }
                vals.push(Value::Real(x));
            }
            VarKind::Enumerated { .. } => {
                let allowed: Vec<usize> = b.allowed[i]
                    .as_ref()
                    .expect("enumerated variable has a symbol mask")
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &ok)| ok.then_some(k))
                    .collect();
                if allowed.is_empty() {
                    return Err(Error::InvalidInput(format!("empty path region for {}", v.name)));
                }
                vals.push(Value::Symbol(allowed[rng.gen_range(0..allowed.len())]));
            }
        }
    }
    Ok(TestInput(vals))
}

pub fn run_sota(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<GenerationResult> {
    let mut run = Run::start(subject, cfg, budget, rng)?;
    let space = subject.space().clone();
    let enc = Encoder::new(&space);
    'outer: while !budget.is_exhausted() && run.dataset.len() < cfg.max_rows {
        run.iteration += 1;
        if !run.overhead(budget, cfg.overhead.per_fit)? {
            break;
        }
        let tree = fit_class_tree(&run.dataset, &cfg.sota_tree)?;
        let paths = tree.paths();
        run.event(Action::Train, json!({ "leaves": paths.len(), "rows": run.dataset.len() }));
        let mut inputs = Vec::new();
        for p in &paths {
            let b = path_box(&space, &enc, &p.steps);
            for _ in 0..cfg.sota_inputs_per_path {
                inputs.push(sample_in_box(&space, &b, rng)?);
            }
        }
        for t in inputs {
            if run.dataset.len() >= cfg.max_rows || !run.execute(t, budget)? {
                break 'outer;
            }
        }
    }
    let tree = fit_class_tree(&run.dataset, &cfg.sota_tree)?;
    Ok(run.finish(cfg.strategy.name(), None, Some(tree)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::space::InputVariable;

    fn space() -> InputSpace {
        InputSpace::new(vec![
            InputVariable::real("x", 0.0, 10.0).unwrap(),
            InputVariable::enumerated("mode", ["a", "b", "c"]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn samples_satisfy_path() {
        let s = space();
        let enc = Encoder::new(&s);
        let steps = vec![
            PathStep { feature: 0, le: false, threshold: 3.0 },
            PathStep { feature: 0, le: true, threshold: 4.0 },
            PathStep { feature: 2, le: false, threshold: 0.5 },
        ];
        let b = path_box(&s, &enc, &steps);
        let mut r = stream(1, "box");
        for _ in 0..500 {
            let t = sample_in_box(&s, &b, &mut r).unwrap();
            let x = enc.encode(&t);
            assert!(steps.iter().all(|st| st.holds(&x)), "{t:?}");
        }
    }

    #[test]
    fn excluded_symbol_never_sampled() {
        let s = space();
        let enc = Encoder::new(&s);
        let steps = vec![PathStep { feature: 1, le: true, threshold: 0.5 }];
        let b = path_box(&s, &enc, &steps);
        assert_eq!(b.allowed[1], Some(vec![false, true, true]));
        let mut r = stream(2, "box");
        for _ in 0..200 {
            assert_ne!(sample_in_box(&s, &b, &mut r).unwrap().0[1], Value::Symbol(0));
        }
    }

    #[test]
    fn empty_path_is_full_space() {
        let s = space();
        let b = path_box(&s, &Encoder::new(&s), &[]);
        assert!(b.lower.iter().all(Option::is_none));
        let t = sample_in_box(&s, &b, &mut stream(3, "b")).unwrap();
        assert!(s.check(&t).is_ok());
    }
}
