//! Systems under test.
//!
//! Each builtin subject is a pure function of its input whose fitness is a
//! signed margin of an analytically known failure region, so a ground-truth
//! verdict is available for every input.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::budget::{Charge, ExecutionBudget};
use crate::error::{Error, Result};
use crate::space::{Fitness, FitnessRange, InputSpace, TestInput, Verdict};

pub trait Subject: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn space(&self) -> &InputSpace;
    /// Raw fitness. Must be deterministic.
    fn fitness(&self, t: &TestInput) -> f64;
    fn fitness_range(&self) -> FitnessRange;
    /// Simulated seconds per execution.
    fn exec_cost(&self) -> f64;
    fn ground_truth(&self, _t: &TestInput) -> Option<Verdict> {
        None
    }
    /// Whether sums of input subsets are meaningful features for this subject.
    fn cumulative_inputs(&self) -> bool {
        false
    }
    /// Reference constants per variable (name, value) used when rendering rules.
    fn references(&self) -> Vec<(usize, String, f64)> {
        Vec::new()
    }
    fn params(&self) -> serde_json::Value;
}

/// Run the subject on `t`, charging one execution.
pub fn execute(s: &dyn Subject, t: &TestInput, budget: &mut ExecutionBudget) -> Result<Fitness> {
    s.space().check(t)?;
    budget.charge(Charge::SutExecution)?;
    Ok(Fitness(s.fitness_range().clip(s.fitness(t))))
}

/// Fitness without budget accounting; for evaluation-only re-execution.
pub fn evaluate_unbudgeted(s: &dyn Subject, t: &TestInput) -> Result<Fitness> {
    s.space().check(t)?;
    Ok(Fitness(s.fitness_range().clip(s.fitness(t))))
}

pub fn ground_truth_verdict(s: &dyn Subject, t: &TestInput) -> Result<Verdict> {
    s.space().check(t)?;
    s.ground_truth(t)
        .ok_or_else(|| Error::NoGroundTruth(s.name().to_string()))
}

/// Ground truth if the subject has one, else the verdict of its fitness.
pub fn reference_verdict(s: &dyn Subject, t: &TestInput) -> Result<Verdict> {
    s.space().check(t)?;
    Ok(match s.ground_truth(t) {
        Some(v) => v,
        None => Fitness(s.fitness(t)).verdict(),
    })
}

fn reals(prefix: &str, n: usize, lower: f64, upper: f64) -> Result<InputSpace> {
    InputSpace::uniform_reals(prefix, n, lower, upper)
}

fn check_cost(c: f64) -> Result<f64> {
    if c > 0.0 && c.is_finite() {
        Ok(c)
    } else {
        Err(Error::Config(format!("exec_cost must be > 0, got {c}")))
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SumCapParams {
    pub n_vars: usize,
    pub lower: f64,
    pub upper: f64,
    pub cap: f64,
    /// Zero-based indices of the capped variables.
    pub subset: Vec<usize>,
    pub weights: Option<Vec<f64>>,
    pub exec_cost: f64,
}

impl Default for SumCapParams {
    fn default() -> Self {
        Self {
            n_vars: 8,
            lower: 0.0,
            upper: 10.0,
            cap: 12.0,
            subset: vec![4, 5, 6],
            weights: None,
            exec_cost: 270.0,
        }
    }
}

/// Cumulative capacity: fails when a weighted sum over a hidden subset of
/// inputs exceeds a cap. Fitness is `cap - sum`.
#[derive(Debug)]
pub struct SumCap {
    params: SumCapParams,
    weights: Vec<f64>,
    space: InputSpace,
    range: FitnessRange,
}

impl SumCap {
    pub fn new(params: SumCapParams) -> Result<Self> {
        let space = reals("class", params.n_vars, params.lower, params.upper)?;
        if params.subset.is_empty() || params.subset.iter().any(|&i| i >= params.n_vars) {
            return Err(Error::Config("sum_cap subset must be non-empty and in range".into()));
        }
        let weights = match &params.weights {
            Some(w) if w.len() == params.subset.len() => w.clone(),
            Some(_) => return Err(Error::Config("sum_cap weights/subset length mismatch".into())),
            None => vec![1.0; params.subset.len()],
        };
        let (mut lo, mut hi) = (0.0, 0.0);
        for w in &weights {
            let (a, b) = (w * params.lower, w * params.upper);
            lo += a.min(b);
            hi += a.max(b);
        }
        let range = FitnessRange::new(params.cap - hi, params.cap - lo).map_err(|_| {
            Error::Config("sum_cap cap must lie strictly inside the reachable sum range".into())
        })?;
        check_cost(params.exec_cost)?;
        Ok(Self {
            params,
            weights,
            space,
            range,
        })
    }

    pub fn subset(&self) -> &[usize] {
        &self.params.subset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cap(&self) -> f64 {
        self.params.cap
    }

    fn weighted_sum(&self, t: &TestInput) -> f64 {
        self.params
            .subset
            .iter()
            .zip(&self.weights)
            .map(|(&i, w)| w * t.get(i))
            .sum()
    }
}

impl Subject for SumCap {
    fn name(&self) -> &str {
        "sum_cap"
    }
    fn space(&self) -> &InputSpace {
        &self.space
    }
    fn fitness(&self, t: &TestInput) -> f64 {
        self.params.cap - self.weighted_sum(t)
    }
    fn fitness_range(&self) -> FitnessRange {
        self.range
    }
    fn exec_cost(&self) -> f64 {
        self.params.exec_cost
    }
    fn ground_truth(&self, t: &TestInput) -> Option<Verdict> {
        Some(if self.weighted_sum(t) > self.params.cap {
            Verdict::Fail
        } else {
            Verdict::Pass
        })
    }
    fn cumulative_inputs(&self) -> bool {
        true
    }
    fn params(&self) -> serde_json::Value {
        serde_json::to_value(&self.params).unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdMixParams {
    pub thresholds: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub exec_cost: f64,
}

impl Default for ThresholdMixParams {
    fn default() -> Self {
        Self {
            thresholds: vec![8.0, 7.0, 9.0, 6.0],
            lower: 0.0,
            upper: 10.0,
            exec_cost: 30.0,
        }
    }
}

/// Per-variable thresholds: fails as soon as any input exceeds its threshold.
/// Fitness is `min_i (threshold_i - v_i)`.
#[derive(Debug)]
pub struct ThresholdMix {
    params: ThresholdMixParams,
    space: InputSpace,
    range: FitnessRange,
}

impl ThresholdMix {
    pub fn new(params: ThresholdMixParams) -> Result<Self> {
        let space = reals("v", params.thresholds.len(), params.lower, params.upper)?;
        if params
            .thresholds
            .iter()
            .any(|&t| !(t > params.lower && t < params.upper))
        {
            return Err(Error::Config("thresholds must lie strictly inside the range".into()));
        }
        let min_th = params.thresholds.iter().cloned().fold(f64::INFINITY, f64::min);
        let range = FitnessRange::new(min_th - params.upper, min_th - params.lower)?;
        check_cost(params.exec_cost)?;
        Ok(Self {
            params,
            space,
            range,
        })
    }
}

impl Subject for ThresholdMix {
    fn name(&self) -> &str {
        "threshold_mix"
    }
    fn space(&self) -> &InputSpace {
        &self.space
    }
    fn fitness(&self, t: &TestInput) -> f64 {
        self.params
            .thresholds
            .iter()
            .enumerate()
            .map(|(i, th)| th - t.get(i))
            .fold(f64::INFINITY, f64::min)
    }
    fn fitness_range(&self) -> FitnessRange {
        self.range
    }
    fn exec_cost(&self) -> f64 {
        self.params.exec_cost
    }
    fn ground_truth(&self, t: &TestInput) -> Option<Verdict> {
        let any_over = self
            .params
            .thresholds
            .iter()
            .enumerate()
            .any(|(i, &th)| t.get(i) > th);
        Some(if any_over { Verdict::Fail } else { Verdict::Pass })
    }
    fn references(&self) -> Vec<(usize, String, f64)> {
        self.params
            .thresholds
            .iter()
            .enumerate()
            .map(|(i, &th)| (i, format!("thresh{}", i + 1), th))
            .collect()
    }
    fn params(&self) -> serde_json::Value {
        serde_json::to_value(&self.params).unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    Chebyshev,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandParams {
    pub center: Vec<f64>,
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub norm: Norm,
    pub exec_cost: f64,
}

impl Default for BandParams {
    fn default() -> Self {
        Self {
            center: vec![3.0, 3.0],
            radius: 5.0,
            lower: 0.0,
            upper: 10.0,
            norm: Norm::Euclidean,
            exec_cost: 30.0,
        }
    }
}

/// Passes inside a ball (or box, under the Chebyshev norm) around a centre
/// and fails outside it. Fitness is `radius - ||v - center||`.
#[derive(Debug)]
pub struct Band {
    params: BandParams,
    space: InputSpace,
    range: FitnessRange,
}

impl Band {
    pub fn new(params: BandParams) -> Result<Self> {
        let n = params.center.len();
        let space = reals("v", n, params.lower, params.upper)?;
        if !(params.radius > 0.0) {
            return Err(Error::Config("band radius must be > 0".into()));
        }
        // farthest corner from the centre
        let far: Vec<f64> = params
            .center
            .iter()
            .map(|&c| {
                if (c - params.lower).abs() > (params.upper - c).abs() {
                    params.lower
                } else {
                    params.upper
                }
            })
            .collect();
        let max_dist = norm_dist(params.norm, &far, &params.center);
        let range = FitnessRange::new(params.radius - max_dist, params.radius).map_err(|_| {
            Error::Config("band radius must leave part of the space outside the ball".into())
        })?;
        check_cost(params.exec_cost)?;
        Ok(Self {
            params,
            space,
            range,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.params.center
    }

    pub fn radius(&self) -> f64 {
        self.params.radius
    }
}

fn norm_dist(norm: Norm, a: &[f64], b: &[f64]) -> f64 {
    let it = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    match norm {
        Norm::Euclidean => it.map(|d| d * d).sum::<f64>().sqrt(),
        Norm::Chebyshev => it.fold(0.0, f64::max),
    }
}

impl Subject for Band {
    fn name(&self) -> &str {
        "band"
    }
    fn space(&self) -> &InputSpace {
        &self.space
    }
    fn fitness(&self, t: &TestInput) -> f64 {
        let v: Vec<f64> = (0..t.len()).map(|i| t.get(i)).collect();
        self.params.radius - norm_dist(self.params.norm, &v, &self.params.center)
    }
    fn fitness_range(&self) -> FitnessRange {
        self.range
    }
    fn exec_cost(&self) -> f64 {
        self.params.exec_cost
    }
    fn ground_truth(&self, t: &TestInput) -> Option<Verdict> {
        let r = self.params.radius;
        let outside = match self.params.norm {
            Norm::Euclidean => {
                let sq: f64 = self
                    .params
                    .center
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (t.get(i) - c).powi(2))
                    .sum();
                sq > r * r
            }
            Norm::Chebyshev => self
                .params
                .center
                .iter()
                .enumerate()
                .any(|(i, c)| (t.get(i) - c).abs() > r),
        };
        Some(if outside { Verdict::Fail } else { Verdict::Pass })
    }
    fn params(&self) -> serde_json::Value {
        serde_json::to_value(&self.params).unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControllerParams {
    /// Number of equally spaced control points of the reference signal.
    pub control_points: usize,
    pub lower: f64,
    pub upper: f64,
    /// Per-step Euler gain `k * dt`; values in (1, 2) give a stable but overshooting loop.
    pub gain: f64,
    pub steps: usize,
    pub overshoot_limit: f64,
    pub exec_cost: f64,
}

impl Default for StepControllerParams {
    fn default() -> Self {
        Self {
            control_points: 4,
            lower: -1.0,
            upper: 1.0,
            gain: 1.5,
            steps: 100,
            overshoot_limit: 0.5,
            exec_cost: 30.0,
        }
    }
}

/// Discrete first-order tracking loop `y += g * (r - y)` driven by a
/// piecewise-constant reference built from control points. Overshoot is the
/// excursion of `y` past the current reference level in the direction of
/// the last reference change. Fitness is `limit - max overshoot`.
#[derive(Debug)]
pub struct StepController {
    params: StepControllerParams,
    space: InputSpace,
    range: FitnessRange,
}

impl StepController {
    pub fn new(params: StepControllerParams) -> Result<Self> {
        let space = reals("cp", params.control_points, params.lower, params.upper)?;
        if !(params.gain > 0.0 && params.gain < 2.0) {
            return Err(Error::Config("controller gain must lie in (0, 2)".into()));
        }
        if params.steps < params.control_points {
            return Err(Error::Config("need at least one step per control point".into()));
        }
        if !(params.overshoot_limit > 0.0) {
            return Err(Error::Config("overshoot_limit must be > 0".into()));
        }
        // |y - r| never exceeds twice the signal span, so overshoot stays below |1-g| times that.
        let span = (params.upper - params.lower)
            .max(params.upper.abs())
            .max(params.lower.abs());
        let worst = (1.0 - params.gain).abs() * 2.0 * span;
        let range = FitnessRange::new(
            params.overshoot_limit - worst.max(2.0 * params.overshoot_limit),
            params.overshoot_limit,
        )?;
        check_cost(params.exec_cost)?;
        Ok(Self {
            params,
            space,
            range,
        })
    }

    fn segment_of(&self, step: usize) -> usize {
        step * self.params.control_points / self.params.steps
    }

    /// Euler-simulated maximum overshoot.
    pub fn simulate_overshoot(&self, t: &TestInput) -> f64 {
        let g = self.params.gain;
        let mut y = 0.0;
        let mut seg = usize::MAX;
        let mut dir = 0.0;
        let mut worst: f64 = 0.0;
        for step in 0..self.params.steps {
            let s = self.segment_of(step);
            let r = t.get(s);
            if s != seg {
                seg = s;
                dir = (r - y).signum() * f64::from(u8::from(r != y));
            }
            y += g * (r - y);
            worst = worst.max(dir * (y - r));
        }
        worst
    }

    /// Closed-form maximum overshoot: within a segment the error evolves as
    /// `(1-g)^tau * (y_start - r)`.
    pub fn closed_form_overshoot(&self, t: &TestInput) -> f64 {
        let q = 1.0 - self.params.gain;
        let mut y_start = 0.0;
        let mut worst: f64 = 0.0;
        for seg in 0..self.params.control_points {
            let len = (0..self.params.steps)
                .filter(|&s| self.segment_of(s) == seg)
                .count();
            let r = t.get(seg);
            let delta: f64 = y_start - r;
            if q < 0.0 && len >= 1 {
                worst = worst.max(delta.abs() * q.abs());
            }
            y_start = r + q.powi(len as i32) * delta;
        }
        worst
    }
}

impl Subject for StepController {
    fn name(&self) -> &str {
        "step_controller"
    }
    fn space(&self) -> &InputSpace {
        &self.space
    }
    fn fitness(&self, t: &TestInput) -> f64 {
        self.params.overshoot_limit - self.simulate_overshoot(t)
    }
    fn fitness_range(&self) -> FitnessRange {
        self.range
    }
    fn exec_cost(&self) -> f64 {
        self.params.exec_cost
    }
    fn ground_truth(&self, t: &TestInput) -> Option<Verdict> {
        Some(if self.closed_form_overshoot(t) > self.params.overshoot_limit {
            Verdict::Fail
        } else {
            Verdict::Pass
        })
    }
    fn params(&self) -> serde_json::Value {
        serde_json::to_value(&self.params).unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XorRegionsParams {
    /// Failure boxes, each a list of per-dimension `[lo, hi]`.
    pub boxes: Vec<Vec<[f64; 2]>>,
    pub lower: f64,
    pub upper: f64,
    pub exec_cost: f64,
}

impl Default for XorRegionsParams {
    fn default() -> Self {
        Self {
            boxes: vec![
                vec![[0.0, 4.0], [6.0, 10.0]],
                vec![[6.0, 10.0], [0.0, 4.0]],
            ],
            lower: 0.0,
            upper: 10.0,
            exec_cost: 30.0,
        }
    }
}

/// Disjoint axis-aligned failure boxes. Fitness is the Chebyshev distance to
/// the nearest box outside all boxes, and minus the depth inside a box.
#[derive(Debug)]
pub struct XorRegions {
    params: XorRegionsParams,
    space: InputSpace,
    range: FitnessRange,
}

impl XorRegions {
    pub fn new(params: XorRegionsParams) -> Result<Self> {
        let dims = params.boxes.first().map(Vec::len).unwrap_or(0);
        if dims == 0 || params.boxes.iter().any(|b| b.len() != dims) {
            return Err(Error::Config("xor_regions needs boxes of equal, non-zero dimension".into()));
        }
        if params.boxes.iter().flatten().any(|[a, b]| !(a < b)) {
            return Err(Error::Config("xor_regions box sides need lo < hi".into()));
        }
        let space = reals("v", dims, params.lower, params.upper)?;
        let span = params.upper - params.lower;
        let depth = params
            .boxes
            .iter()
            .map(|b| b.iter().map(|[a, c]| (c - a) / 2.0).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        let range = FitnessRange::new(-depth.max(1e-9), span)?;
        check_cost(params.exec_cost)?;
        Ok(Self {
            params,
            space,
            range,
        })
    }

    fn signed_box(b: &[[f64; 2]], t: &TestInput) -> f64 {
        let inside = b
            .iter()
            .enumerate()
            .all(|(i, [lo, hi])| t.get(i) >= *lo && t.get(i) <= *hi);
        if inside {
            -b.iter()
                .enumerate()
                .map(|(i, [lo, hi])| (t.get(i) - lo).min(hi - t.get(i)))
                .fold(f64::INFINITY, f64::min)
        } else {
            b.iter()
                .enumerate()
                .map(|(i, [lo, hi])| (lo - t.get(i)).max(t.get(i) - hi).max(0.0))
                .fold(0.0, f64::max)
        }
    }
}

impl Subject for XorRegions {
    fn name(&self) -> &str {
        "xor_regions"
    }
    fn space(&self) -> &InputSpace {
        &self.space
    }
    fn fitness(&self, t: &TestInput) -> f64 {
        self.params
            .boxes
            .iter()
            .map(|b| Self::signed_box(b, t))
            .fold(f64::INFINITY, f64::min)
    }
    fn fitness_range(&self) -> FitnessRange {
        self.range
    }
    fn exec_cost(&self) -> f64 {
        self.params.exec_cost
    }
    fn ground_truth(&self, t: &TestInput) -> Option<Verdict> {
        let inside = self.params.boxes.iter().any(|b| {
            b.iter()
                .enumerate()
                .all(|(i, [lo, hi])| t.get(i) > *lo && t.get(i) < *hi)
        });
        Some(if inside { Verdict::Fail } else { Verdict::Pass })
    }
    fn params(&self) -> serde_json::Value {
        serde_json::to_value(&self.params).unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------

type Builder = fn(&serde_json::Value) -> Result<Arc<dyn Subject>>;

fn build<P, S>(params: &serde_json::Value, ctor: fn(P) -> Result<S>) -> Result<Arc<dyn Subject>>
where
    P: DeserializeOwned + Default,
    S: Subject + 'static,
{
    let p: P = if params.is_null() {
        P::default()
    } else {
        serde_json::from_value(params.clone()).map_err(|e| Error::Config(e.to_string()))?
    };
    Ok(Arc::new(ctor(p)?))
}

/// Name-indexed registry of subject constructors.
#[derive(Clone)]
pub struct SubjectRegistry {
    builders: BTreeMap<String, Builder>,
}

impl fmt::Debug for SubjectRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.builders.keys()).finish()
    }
}

impl Default for SubjectRegistry {
    fn default() -> Self {
        let mut r = Self {
            builders: BTreeMap::new(),
        };
        r.register("sum_cap", |p| build(p, SumCap::new));
        r.register("threshold_mix", |p| build(p, ThresholdMix::new));
        r.register("band", |p| build(p, Band::new));
        r.register("step_controller", |p| build(p, StepController::new));
        r.register("xor_regions", |p| build(p, XorRegions::new));
        r
    }
}

impl SubjectRegistry {
    pub fn register(&mut self, name: impl Into<String>, builder: Builder) {
        self.builders.insert(name.into(), builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    /// Build a subject; `params` may be `null` for defaults.
    pub fn build(&self, name: &str, params: &serde_json::Value) -> Result<Arc<dyn Subject>> {
        let b = self.builders.get(name).ok_or_else(|| Error::Unknown {
            kind: "subject",
            name: name.to_string(),
        })?;
        b(params)
    }
}

/// Named, ready-to-run subjects.
#[derive(Debug, Clone, Default)]
pub struct SubjectCatalog {
    subjects: BTreeMap<String, Arc<dyn Subject>>,
}

impl SubjectCatalog {
    pub fn insert(&mut self, subject: Arc<dyn Subject>) {
        self.subjects.insert(subject.name().to_string(), subject);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Subject>> {
        self.subjects.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "subject",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.subjects.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Subject>> {
        self.subjects.values()
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }
}

/// The five builtin subjects with default parameters.
pub fn builtin_catalog() -> SubjectCatalog {
    let reg = SubjectRegistry::default();
    let mut cat = SubjectCatalog::default();
    for name in reg.names() {
        cat.insert(
            reg.build(name, &serde_json::Value::Null)
                .expect("builtin defaults are valid"),
        );
    }
    cat
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn sum_cap_3() -> SumCap {
        SumCap::new(SumCapParams {
            n_vars: 3,
            lower: 0.0,
            upper: 10.0,
            cap: 10.0,
            subset: vec![0, 1, 2],
            weights: None,
            exec_cost: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn sum_cap_examples() {
        let s = sum_cap_3();
        let mut b = ExecutionBudget::executions(10, 1.0).unwrap();
        let f = execute(&s, &TestInput::reals([3.0, 3.0, 3.0]), &mut b).unwrap();
        assert_eq!(f.0, 10.0 - 9.0);
        assert_eq!(f.verdict(), Verdict::Pass);
        let t = TestInput::reals([4.0, 4.0, 4.0]);
        let f = execute(&s, &t, &mut b).unwrap();
        assert_eq!(f.0, -2.0);
        assert_eq!(ground_truth_verdict(&s, &t).unwrap(), Verdict::Fail);
        assert_eq!(b.consumed_executions(), 2);
    }

    #[test]
    fn exhausted_budget_blocks_execution() {
        let s = sum_cap_3();
        let mut b = ExecutionBudget::executions(0, 1.0).unwrap();
        assert_eq!(
            execute(&s, &TestInput::reals([1.0, 1.0, 1.0]), &mut b),
            Err(Error::BudgetExhausted)
        );
    }

    #[test]
    fn invalid_input_rejected_before_charging() {
        let s = sum_cap_3();
        let mut b = ExecutionBudget::executions(5, 1.0).unwrap();
        assert!(matches!(
            execute(&s, &TestInput::reals([11.0, 1.0, 1.0]), &mut b),
            Err(Error::InvalidInput(_))
        ));
        assert_eq!(b.consumed_executions(), 0);
    }

    #[test]
    fn catalog_contents() {
        let cat = builtin_catalog();
        assert!(cat.len() >= 5);
        assert_eq!(cat.get("sum_cap").unwrap().space().len(), 8);
        for s in cat.iter() {
            assert!(s.exec_cost() > 0.0);
        }
        assert!(cat.get("nope").is_err());
    }

    #[test]
    fn band_center_and_boundary() {
        let b = Band::new(BandParams::default()).unwrap();
        let c = TestInput::reals(b.center().to_vec());
        assert_eq!(b.fitness(&c), b.radius());
        let edge = TestInput::reals([3.0 + 5.0, 3.0]);
        assert_eq!(b.fitness(&edge), 0.0);
        assert_eq!(ground_truth_verdict(&b, &edge).unwrap(), Verdict::Pass);
    }

    #[test]
    fn step_controller_zero_amplitude() {
        let s = StepController::new(StepControllerParams::default()).unwrap();
        let t = TestInput::reals([0.0; 4]);
        assert_eq!(s.fitness(&t), 0.5);
        assert_eq!(ground_truth_verdict(&s, &t).unwrap(), Verdict::Pass);
    }

    #[test]
    fn step_controller_simulation_matches_closed_form() {
        let s = StepController::new(StepControllerParams::default()).unwrap();
        let mut rng = crate::rng::stream(3, "t");
        for _ in 0..500 {
            let t = TestInput::reals((0..4).map(|_| rng.gen_range(-1.0..=1.0)));
            let a = s.simulate_overshoot(&t);
            let b = s.closed_form_overshoot(&t);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn threshold_mix_all_below_passes() {
        let s = ThresholdMix::new(ThresholdMixParams::default()).unwrap();
        let t = TestInput::reals([1.0, 1.0, 1.0, 1.0]);
        assert_eq!(ground_truth_verdict(&s, &t).unwrap(), Verdict::Pass);
        assert!(s.fitness(&t) > 0.0);
    }

    #[test]
    fn unknown_params_rejected() {
        let reg = SubjectRegistry::default();
        assert!(reg
            .build("band", &serde_json::json!({"radius": 2.0, "bogus": 1}))
            .is_err());
        let s = reg.build("band", &serde_json::json!({"radius": 2.0})).unwrap();
        assert_eq!(s.fitness(&TestInput::reals([3.0, 3.0])), 2.0);
    }
}
