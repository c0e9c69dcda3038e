//! Rule features: single variables or (weighted) sums of variable subsets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{InputSpace, TestInput};

/// Largest variable count for subset enumeration.
pub const MAX_SUBSET_VARS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Var {
        index: usize,
    },
    SumOfSubset {
        indices: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl Feature {
    pub fn var(space: &InputSpace, index: usize) -> Result<Self> {
        let v = space
            .variables()
            .get(index)
            .ok_or_else(|| Error::SpaceMismatch(format!("no variable {index}")))?;
        Ok(Self {
            name: v.name.clone(),
            kind: FeatureKind::Var { index },
        })
    }

    /// Sum over real variables `indices` (sorted, deduplicated, at least two).
    pub fn sum(space: &InputSpace, indices: &[usize], weights: Option<Vec<f64>>) -> Result<Self> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if idx.len() < 2 || idx.len() != indices.len() {
            return Err(Error::InvalidInput("a subset sum needs at least two distinct variables".into()));
        }
        if let Some(w) = &weights {
            if w.len() != idx.len() || w.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("one finite weight per summed variable".into()));
            }
        }
        let mut names = Vec::with_capacity(idx.len());
        for &i in &idx {
            let v = space
                .variables()
                .get(i)
                .ok_or_else(|| Error::SpaceMismatch(format!("no variable {i}")))?;
            if !v.is_real() {
                return Err(Error::InvalidInput(format!("{} is not real-valued", v.name)));
            }
            names.push(v.name.clone());
        }
        Ok(Self {
            name: format!("sum({})", names.join("+")),
            kind: FeatureKind::SumOfSubset { indices: idx, weights },
        })
    }

    pub fn value(&self, t: &TestInput) -> f64 {
        match &self.kind {
            FeatureKind::Var { index } => t.get(*index),
            FeatureKind::SumOfSubset { indices, weights } => match weights {
                None => indices.iter().map(|&i| t.get(i)).sum(),
                Some(w) => indices.iter().zip(w).map(|(&i, w)| w * t.get(i)).sum(),
            },
        }
    }

    /// `(variable, coefficient)` pairs, variables ascending.
    pub fn linear_form(&self) -> Vec<(usize, f64)> {
        match &self.kind {
            FeatureKind::Var { index } => vec![(*index, 1.0)],
            FeatureKind::SumOfSubset { indices, weights } => indices
                .iter()
                .enumerate()
                .map(|(k, &i)| (i, weights.as_ref().map_or(1.0, |w| w[k])))
                .collect(),
        }
    }

    pub fn max_index(&self) -> usize {
        self.linear_form().iter().map(|(i, _)| *i).max().unwrap_or(0)
    }

    pub fn is_sum(&self) -> bool {
        matches!(self.kind, FeatureKind::SumOfSubset { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
}

impl Op {
    pub fn holds(self, x: f64, c: f64) -> bool {
        match self {
            Op::Le => x <= c,
            Op::Gt => x > c,
            Op::Ge => x >= c,
            Op::Lt => x < c,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "≤",
            Op::Gt => ">",
            Op::Ge => "≥",
            Op::Lt => "<",
        }
    }

    pub fn is_lower_bound(self) -> bool {
        matches!(self, Op::Gt | Op::Ge)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub feature: Feature,
    pub op: Op,
    pub constant: f64,
}

impl Predicate {
    pub fn holds(&self, t: &TestInput) -> bool {
        self.op.holds(self.feature.value(t), self.constant)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.feature.name, self.op.symbol(), fmt_constant(self.constant))
    }
}

pub(crate) fn fmt_constant(c: f64) -> String {
    let s = format!("{c:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Individual real and enumerated variables (enumerated ones by symbol index).
pub fn individual_features(space: &InputSpace) -> Vec<Feature> {
    (0..space.len())
        .map(|i| Feature::var(space, i).expect("index in range"))
        .collect()
}

/// Candidate feature sets for cumulative inputs: one single-sum set per
/// subset of at least two real variables (by size, then lexicographic),
/// followed by the set of all individual variables.
pub fn enumerate_sum_features(space: &InputSpace) -> Result<Vec<Vec<Feature>>> {
    let reals: Vec<usize> = (0..space.len()).filter(|&i| space.variables()[i].is_real()).collect();
    let n = reals.len();
    if n > MAX_SUBSET_VARS {
        return Err(Error::TooManyVariables(n));
    }
    if n < 2 {
        return Err(Error::InvalidInput("subset sums need at least two real variables".into()));
    }
    let mut sets = Vec::with_capacity((1usize << n) - n);
    for size in 2..=n {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let idx: Vec<usize> = combo.iter().map(|&k| reals[k]).collect();
            sets.push(vec![Feature::sum(space, &idx, None)?]);
            // next combination in lexicographic order
            let mut k = size;
            while k > 0 && combo[k - 1] == n - size + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            combo[k - 1] += 1;
            for j in k..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    sets.push(individual_features(space));
    Ok(sets)
}
