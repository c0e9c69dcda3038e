//! Test-input generation and the preprocessing phase that builds the
//! initial executed dataset.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::budget::ExecutionBudget;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::space::{InputSpace, LabeledDataset, TestInput, Value, VarKind, Verdict};
use crate::subjects::{execute, Subject};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub initial_dataset_size: usize,
    pub smote_k: usize,
    pub adaptive_candidates: usize,
    /// Use adaptive random sampling in preprocessing; plain uniform otherwise.
    pub adaptive: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            initial_dataset_size: 100,
            smote_k: 5,
            adaptive_candidates: 10,
            adaptive: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.initial_dataset_size;
        if d < 4 || !d.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "initial_dataset_size must be even and >= 4, got {d}"
            )));
        }
        if self.smote_k == 0 {
            return Err(Error::Config("smote_k must be >= 1".into()));
        }
        if self.adaptive_candidates == 0 {
            return Err(Error::Config("adaptive_candidates must be >= 1".into()));
        }
        Ok(())
    }
}

/// One uniform draw from the space.
pub fn sample_uniform(space: &InputSpace, rng: &mut Rng) -> TestInput {
    TestInput(
        space
            .variables()
            .iter()
            .map(|v| match &v.kind {
                VarKind::Real { lower, upper } => Value::Real(rng.gen_range(*lower..=*upper)),
                VarKind::Enumerated { values } => Value::Symbol(rng.gen_range(0..values.len())),
            })
            .collect(),
    )
}

pub fn generate_tests(space: &InputSpace, n: usize, rng: &mut Rng) -> Vec<TestInput> {
    (0..n).map(|_| sample_uniform(space, rng)).collect()
}

/// Euclidean distance after min-max normalising reals to [0, 1]; enumerated
/// dimensions contribute 0 on a match and 1 on a mismatch.
pub fn normalized_distance(space: &InputSpace, a: &TestInput, b: &TestInput) -> f64 {
    space
        .variables()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .map(|(var, (x, y))| match (&var.kind, x, y) {
            (VarKind::Real { lower, upper }, Value::Real(x), Value::Real(y)) => {
                ((x - y) / (upper - lower)).powi(2)
            }
            (_, Value::Symbol(x), Value::Symbol(y)) => f64::from(u8::from(x != y)),
            _ => 1.0,
        })
        .sum::<f64>()
        .sqrt()
}

/// Index of the candidate farthest (max-min) from `pool`; the first
/// candidate wins when `pool` is empty or on ties.
pub fn pick_farthest(space: &InputSpace, candidates: &[TestInput], pool: &[&TestInput]) -> usize {
    if pool.is_empty() {
        return 0;
    }
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let d = pool
            .iter()
            .map(|p| normalized_distance(space, c, p))
            .fold(f64::INFINITY, f64::min);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Adaptive random testing: each new input is the best of
/// `candidates_per_pick` uniform candidates under max-min distance to
/// `existing` and to previously picked inputs.
pub fn adaptive_random(
    space: &InputSpace,
    n: usize,
    existing: &[TestInput],
    candidates_per_pick: usize,
    rng: &mut Rng,
) -> Vec<TestInput> {
    let k = candidates_per_pick.max(1);
    let mut picked: Vec<TestInput> = Vec::with_capacity(n);
    for _ in 0..n {
        let cands = generate_tests(space, k, rng);
        let pool: Vec<&TestInput> = existing.iter().chain(picked.iter()).collect();
        let i = pick_farthest(space, &cands, &pool);
        picked.push(cands[i].clone());
    }
    picked
}

/// Interpolate between `base` and `neighbor` at fraction `u`; enumerated
/// dimensions keep the base symbol.
pub fn interpolate(base: &TestInput, neighbor: &TestInput, u: f64) -> TestInput {
    TestInput(
        base.values()
            .iter()
            .zip(neighbor.values())
            .map(|(b, n)| match (b, n) {
                (Value::Real(x), Value::Real(y)) => Value::Real(x + u * (y - x)),
                (b, _) => *b,
            })
            .collect(),
    )
}

fn real_distance(space: &InputSpace, a: &TestInput, b: &TestInput) -> f64 {
    space
        .variables()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.bounds().map(|(lo, hi)| ((a.get(i) - b.get(i)) / (hi - lo)).powi(2)))
        .sum::<f64>()
        .sqrt()
}

/// SMOTE over `minority`: `m` synthetic, unlabelled inputs, each on the
/// segment between a base minority point (taken round-robin) and one of its
/// `k` nearest minority neighbours.
pub fn smote(
    space: &InputSpace,
    minority: &[TestInput],
    k: usize,
    m: usize,
    rng: &mut Rng,
) -> Result<Vec<TestInput>> {
    if minority.len() < 2 || k == 0 || k > minority.len() - 1 {
        return Err(Error::TooFewMinority {
            have: minority.len(),
            k,
        });
    }
    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut others: Vec<(f64, usize)> = minority
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, b)| (real_distance(space, a, b), j))
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..minority.len()).collect();
    order.shuffle(rng);
    let mut out = Vec::with_capacity(m);
    for s in 0..m {
        let base = order[s % order.len()];
        let nb = *neighbors[base].choose(rng).expect("k >= 1");
        let u: f64 = rng.gen_range(0.0..=1.0);
        let mut t = interpolate(&minority[base], &minority[nb], u);
        clamp_into(space, &mut t);
        out.push(t);
    }
    Ok(out)
}

// Interpolation of in-range points stays in range up to rounding.
fn clamp_into(space: &InputSpace, t: &mut TestInput) {
    for (v, x) in space.variables().iter().zip(t.0.iter_mut()) {
        if let (Some((lo, hi)), Value::Real(val)) = (v.bounds(), x) {
            *val = val.clamp(lo, hi);
        }
    }
}

/// Number of SMOTE inputs for a first half with the given verdict counts:
/// `major - minor`, capped at `half`, and zero when the minority has fewer
/// than two rows.
pub fn smote_count(pass: usize, fail: usize, half: usize) -> usize {
    let (minor, major) = (pass.min(fail), pass.max(fail));
    if minor < 2 {
        0
    } else {
        (major - minor).min(half)
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub dataset: LabeledDataset,
    /// Set when the budget ran out before `d` rows were executed.
    pub truncated: bool,
    pub smote_inputs: usize,
}

fn pick_fresh(
    space: &InputSpace,
    cfg: &SamplerConfig,
    n: usize,
    existing: &[TestInput],
    rng: &mut Rng,
) -> Vec<TestInput> {
    if cfg.adaptive {
        adaptive_random(space, n, existing, cfg.adaptive_candidates, rng)
    } else {
        generate_tests(space, n, rng)
    }
}

/// Build the initial dataset of `d` executed rows: half from (adaptive)
/// random sampling, then SMOTE-synthesised minority inputs that are executed
/// to get their real fitness, then random fill up to `d`.
pub fn preprocess(
    subject: &dyn Subject,
    cfg: &SamplerConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<Preprocessed> {
    cfg.validate()?;
    let space = subject.space();
    let half = cfg.initial_dataset_size / 2;
    let mut ds = LabeledDataset::new(space.clone());

    let run = |ds: &mut LabeledDataset, inputs: Vec<TestInput>, budget: &mut ExecutionBudget| -> Result<bool> {
        for t in inputs {
            match execute(subject, &t, budget) {
                Ok(f) => ds.push_executed(t, f)?,
                Err(Error::BudgetExhausted) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    };

    let first = pick_fresh(space, cfg, half, &[], rng);
    if !run(&mut ds, first, budget)? {
        return Ok(Preprocessed {
            dataset: ds,
            truncated: true,
            smote_inputs: 0,
        });
    }

    let (pass, fail) = ds.verdict_counts();
    let minor_label = if fail <= pass { Verdict::Fail } else { Verdict::Pass };
    let m = smote_count(pass, fail, half);
    let mut synthetic = Vec::new();
    if m > 0 {
        let minority: Vec<TestInput> = ds
            .rows()
            .iter()
            .filter(|r| r.verdict() == minor_label)
            .map(|r| r.input.clone())
            .collect();
        let k = cfg.smote_k.min(minority.len() - 1);
        synthetic = smote(space, &minority, k, m, rng)?;
    }
    let smote_inputs = synthetic.len();
    if !run(&mut ds, synthetic, budget)? {
        return Ok(Preprocessed {
            dataset: ds,
            truncated: true,
            smote_inputs,
        });
    }

    let existing: Vec<TestInput> = ds.inputs().cloned().collect();
    let fill = pick_fresh(space, cfg, half - smote_inputs, &existing, rng);
    let complete = run(&mut ds, fill, budget)?;
    Ok(Preprocessed {
        dataset: ds,
        truncated: !complete,
        smote_inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::space::{InputVariable, Source};
    use crate::subjects::{Band, BandParams, ThresholdMix, ThresholdMixParams};

    fn unit(n: usize) -> InputSpace {
        InputSpace::uniform_reals("v", n, 0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_single_draw_in_range() {
        let s = unit(1);
        let t = &generate_tests(&s, 1, &mut stream(1, "g"))[0];
        assert!(s.check(t).is_ok());
    }

    #[test]
    fn uniform_ks_statistic() {
        let s = unit(1);
        let mut xs: Vec<f64> = generate_tests(&s, 1000, &mut stream(2, "g"))
            .iter()
            .map(|t| t.get(0))
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, x)| ((i as f64 + 1.0) / n - x).abs().max((x - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(d < 0.05, "KS statistic {d}");
    }

    #[test]
    fn enumerated_frequencies() {
        let s = InputSpace::new(vec![InputVariable::enumerated("e", ["A", "B"]).unwrap()]).unwrap();
        let ts = generate_tests(&s, 10_000, &mut stream(3, "g"));
        let a = ts.iter().filter(|t| t.0[0] == Value::Symbol(0)).count() as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&a), "{a}");
    }

    #[test]
    fn farthest_candidate_is_picked() {
        let s = unit(1);
        let existing = TestInput::reals([0.0]);
        let cands = vec![TestInput::reals([0.1]), TestInput::reals([0.9])];
        assert_eq!(pick_farthest(&s, &cands, &[&existing]), 1);
        assert_eq!(pick_farthest(&s, &cands[..1], &[]), 0);
    }

    #[test]
    fn adaptive_spreads_points() {
        fn min_pairwise(s: &InputSpace, ts: &[TestInput]) -> f64 {
            let mut m = f64::INFINITY;
            for i in 0..ts.len() {
                for j in i + 1..ts.len() {
                    m = m.min(normalized_distance(s, &ts[i], &ts[j]));
                }
            }
            m
        }
        let s = unit(2);
        let mut art = Vec::new();
        let mut rnd = Vec::new();
        for seed in 0..20 {
            art.push(min_pairwise(&s, &adaptive_random(&s, 50, &[], 10, &mut stream(seed, "a"))));
            rnd.push(min_pairwise(&s, &generate_tests(&s, 50, &mut stream(seed, "r"))));
        }
        art.sort_by(f64::total_cmp);
        rnd.sort_by(f64::total_cmp);
        assert!(art[10] >= rnd[10], "{} vs {}", art[10], rnd[10]);
    }

    #[test]
    fn smote_examples() {
        let s = unit(2);
        let minority = vec![TestInput::reals([0.0, 0.0]), TestInput::reals([1.0, 1.0])];
        for t in smote(&s, &minority, 1, 20, &mut stream(4, "s")).unwrap() {
            assert!((t.get(0) - t.get(1)).abs() < 1e-12);
        }
        assert_eq!(interpolate(&minority[0], &minority[1], 0.0), minority[0]);
        assert!(matches!(
            smote(&s, &minority[..1], 1, 3, &mut stream(4, "s")),
            Err(Error::TooFewMinority { .. })
        ));
        assert!(smote(&s, &minority, 2, 3, &mut stream(4, "s")).is_err());
    }

    #[test]
    fn smote_keeps_enumerated_base_symbol() {
        let s = InputSpace::new(vec![
            InputVariable::real("x", 0.0, 1.0).unwrap(),
            InputVariable::enumerated("e", ["a", "b"]).unwrap(),
        ])
        .unwrap();
        let base = TestInput(vec![Value::Real(0.0), Value::Symbol(0)]);
        s.check(&base).unwrap();
        let nb = TestInput(vec![Value::Real(1.0), Value::Symbol(1)]);
        let t = interpolate(&base, &nb, 0.5);
        assert_eq!(t.0, vec![Value::Real(0.5), Value::Symbol(0)]);
    }

    #[test]
    fn preprocess_returns_d_executed_rows() {
        let subj = ThresholdMix::new(ThresholdMixParams::default()).unwrap();
        let cfg = SamplerConfig {
            initial_dataset_size: 40,
            ..Default::default()
        };
        let mut b = ExecutionBudget::executions(100, 1.0).unwrap();
        let out = preprocess(&subj, &cfg, &mut b, &mut stream(5, "p")).unwrap();
        assert_eq!(out.dataset.len(), 40);
        assert!(!out.truncated);
        assert!(out.dataset.rows().iter().all(|r| r.source == Source::Executed));
        assert_eq!(b.consumed_executions(), 40);
    }

    #[test]
    fn preprocess_truncates_on_budget() {
        let subj = ThresholdMix::new(ThresholdMixParams::default()).unwrap();
        let cfg = SamplerConfig {
            initial_dataset_size: 40,
            ..Default::default()
        };
        let mut b = ExecutionBudget::executions(13, 1.0).unwrap();
        let out = preprocess(&subj, &cfg, &mut b, &mut stream(5, "p")).unwrap();
        assert!(out.truncated);
        assert_eq!(out.dataset.len(), 13);
    }

    #[test]
    fn preprocess_all_pass_skips_smote() {
        // Tiny failure region: the first half is almost surely all-pass.
        let subj = Band::new(BandParams {
            center: vec![5.0, 5.0],
            radius: 7.06,
            ..Default::default()
        })
        .unwrap();
        let cfg = SamplerConfig {
            initial_dataset_size: 20,
            ..Default::default()
        };
        let mut b = ExecutionBudget::executions(100, 1.0).unwrap();
        let out = preprocess(&subj, &cfg, &mut b, &mut stream(9, "p")).unwrap();
        assert_eq!(out.dataset.len(), 20);
        if out.dataset.rows()[..10].iter().all(|r| r.verdict() == Verdict::Pass) {
            assert_eq!(out.smote_inputs, 0);
        }
    }

    #[test]
    fn smote_count_arithmetic() {
        // d = 100: 40/10 -> 30 synthetic + 20 fill; 25/25 -> 0 + 50; 50/0 -> 0 + 50
        assert_eq!(smote_count(40, 10, 50), 30);
        assert_eq!(50 - smote_count(40, 10, 50), 20);
        assert_eq!(smote_count(25, 25, 50), 0);
        assert_eq!(smote_count(50, 0, 50), 0);
        assert_eq!(smote_count(1, 49, 50), 0);
        assert_eq!(smote_count(2, 98, 50), 50);
    }

    #[test]
    fn config_validation() {
        for d in [0, 2, 5] {
            let c = SamplerConfig {
                initial_dataset_size: d,
                ..Default::default()
            };
            assert!(c.validate().is_err());
        }
    }
}
