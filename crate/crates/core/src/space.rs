//! Input spaces, test inputs, fitness/verdict semantics and labelled datasets.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarKind {
    Real { lower: f64, upper: f64 },
    Enumerated { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputVariable {
    pub name: String,
    #[serde(flatten)]
    pub kind: VarKind,
}

impl InputVariable {
    pub fn real(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        let v = Self {
            name: name.into(),
            kind: VarKind::Real { lower, upper },
        };
        v.validate()?;
        Ok(v)
    }

    pub fn enumerated<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let v = Self {
            name: name.into(),
            kind: VarKind::Enumerated {
                values: values.into_iter().map(Into::into).collect(),
            },
        };
        v.validate()?;
        Ok(v)
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            VarKind::Real { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::InvalidSpace(format!(
                        "variable `{}` needs finite bounds with lower < upper, got [{lower}, {upper}]",
                        self.name
                    )));
                }
            }
            VarKind::Enumerated { values } => {
                let distinct: HashSet<&String> = values.iter().collect();
                if values.len() < 2 || distinct.len() != values.len() {
                    return Err(Error::InvalidSpace(format!(
                        "variable `{}` needs at least two distinct symbols",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        matches!(self.kind, VarKind::Real { .. })
    }

    /// Bounds of a real variable, `None` for enumerated ones.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self.kind {
            VarKind::Real { lower, upper } => Some((lower, upper)),
            VarKind::Enumerated { .. } => None,
        }
    }

    /// Number of symbols of an enumerated variable, `None` for reals.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            VarKind::Real { .. } => None,
            VarKind::Enumerated { values } => Some(values.len()),
        }
    }
}

/// Ordered, non-empty list of uniquely named variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<InputVariable>", into = "Vec<InputVariable>")]
pub struct InputSpace {
    variables: Vec<InputVariable>,
}

impl TryFrom<Vec<InputVariable>> for InputSpace {
    type Error = Error;
    fn try_from(variables: Vec<InputVariable>) -> Result<Self> {
        Self::new(variables)
    }
}

impl From<InputSpace> for Vec<InputVariable> {
    fn from(s: InputSpace) -> Self {
        s.variables
    }
}

impl InputSpace {
    pub fn new(variables: Vec<InputVariable>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidSpace("input space has no variables".into()));
        }
        let mut seen = HashSet::new();
        for v in &variables {
            v.validate()?;
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate variable name `{}`",
                    v.name
                )));
            }
        }
        Ok(Self { variables })
    }

    /// Convenience constructor for `n` real variables named `prefix1..prefixn`.
    pub fn uniform_reals(prefix: &str, n: usize, lower: f64, upper: f64) -> Result<Self> {
        let vars = (1..=n)
            .map(|i| InputVariable::real(format!("{prefix}{i}"), lower, upper))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars)
    }

    pub fn variables(&self) -> &[InputVariable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    /// Check that `t` is a member of the space.
    pub fn check(&self, t: &TestInput) -> Result<()> {
        if t.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "arity {} does not match space arity {}",
                t.len(),
                self.len()
            )));
        }
        for (var, val) in self.variables.iter().zip(t.values()) {
            match (&var.kind, val) {
                (VarKind::Real { lower, upper }, Value::Real(x)) => {
                    if !(x.is_finite() && *x >= *lower && *x <= *upper) {
                        return Err(Error::InvalidInput(format!(
                            "`{}` = {x} outside [{lower}, {upper}]",
                            var.name
                        )));
                    }
                }
                (VarKind::Enumerated { values }, Value::Symbol(s)) => {
                    if *s >= values.len() {
                        return Err(Error::InvalidInput(format!(
                            "`{}` symbol index {s} outside {} symbols",
                            var.name,
                            values.len()
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "`{}` has a value of the wrong kind",
                        var.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Render a value of variable `i` as text (symbol name for enumerated variables).
    pub fn format_value(&self, i: usize, v: &Value) -> String {
        match (&self.variables[i].kind, v) {
            (VarKind::Enumerated { values }, Value::Symbol(s)) => values[*s].clone(),
            (_, Value::Real(x)) => format!("{x:.16e}"),
            (_, Value::Symbol(s)) => s.to_string(),
        }
    }

    /// Parse a value of variable `i` from its textual form.
    pub fn parse_value(&self, i: usize, text: &str) -> Result<Value> {
        let var = &self.variables[i];
        match &var.kind {
            VarKind::Real { .. } => text
                .trim()
                .parse::<f64>()
                .map(Value::Real)
                .map_err(|e| Error::InvalidInput(format!("`{}`: {e}", var.name))),
            VarKind::Enumerated { values } => values
                .iter()
                .position(|s| s == text.trim())
                .map(Value::Symbol)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("`{}`: unknown symbol `{text}`", var.name))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    /// Index into the variable's symbol list.
    Symbol(usize),
}

impl Value {
    /// Numeric view: the real value, or the symbol index.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Real(x) => x,
            Value::Symbol(s) => s as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestInput(pub Vec<Value>);

impl TestInput {
    pub fn reals(values: impl IntoIterator<Item = f64>) -> Self {
        Self(values.into_iter().map(Value::Real).collect())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i].as_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn flip(self) -> Self {
        match self {
            Verdict::Pass => Verdict::Fail,
            Verdict::Fail => Verdict::Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            other => Err(Error::InvalidInput(format!("unknown verdict `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fitness(pub f64);

impl Fitness {
    pub fn verdict(self) -> Verdict {
        verdict(self)
    }
}

/// Pass iff the fitness is non-negative.
pub fn verdict(f: Fitness) -> Verdict {
    if f.0 >= 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Declared fitness interval `[-a, b]` of a subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessRange {
    pub lower: f64,
    pub upper: f64,
}

impl FitnessRange {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < 0.0 && upper > 0.0) {
            return Err(Error::Config(format!(
                "fitness range must straddle zero, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Executed,
    Predicted,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Executed => "executed",
            Source::Predicted => "predicted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub input: TestInput,
    pub fitness: Fitness,
    pub source: Source,
}

impl LabeledRow {
    pub fn verdict(&self) -> Verdict {
        self.fitness.verdict()
    }
}

/// Append-only collection of labelled rows over one input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    space: InputSpace,
    rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    pub fn new(space: InputSpace) -> Self {
        Self {
            space,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(space: InputSpace, rows: Vec<LabeledRow>) -> Result<Self> {
        let mut ds = Self::new(space);
        for r in rows {
            ds.push(r)?;
        }
        Ok(ds)
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn rows(&self) -> &[LabeledRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: LabeledRow) -> Result<()> {
        self.space.check(&row.input)?;
        if !row.fitness.0.is_finite() {
            return Err(Error::InvalidInput("fitness must be finite".into()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_executed(&mut self, input: TestInput, fitness: Fitness) -> Result<()> {
        self.push(LabeledRow {
            input,
            fitness,
            source: Source::Executed,
        })
    }

    /// Number of (pass, fail) rows.
    pub fn verdict_counts(&self) -> (usize, usize) {
        let fails = self
            .rows
            .iter()
            .filter(|r| r.verdict() == Verdict::Fail)
            .count();
        (self.rows.len() - fails, fails)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &TestInput> {
        self.rows.iter().map(|r| &r.input)
    }

    pub fn count_source(&self, source: Source) -> usize {
        self.rows.iter().filter(|r| r.source == source).count()
    }

    /// Subset view holding the given row indices, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            space: self.space.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Maps test inputs onto numeric feature vectors: reals verbatim, enumerated
/// variables one-hot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    /// Variable index owning each column.
    pub column_var: Vec<usize>,
    /// Symbol index of one-hot columns, `None` for real columns.
    pub column_symbol: Vec<Option<usize>>,
    pub column_names: Vec<String>,
}

impl Encoder {
    pub fn new(space: &InputSpace) -> Self {
        let mut column_var = Vec::new();
        let mut column_symbol = Vec::new();
        let mut column_names = Vec::new();
        for (i, v) in space.variables().iter().enumerate() {
            match &v.kind {
                VarKind::Real { .. } => {
                    column_var.push(i);
                    column_symbol.push(None);
                    column_names.push(v.name.clone());
                }
                VarKind::Enumerated { values } => {
                    for (s, sym) in values.iter().enumerate() {
                        column_var.push(i);
                        column_symbol.push(Some(s));
                        column_names.push(format!("{}={sym}", v.name));
                    }
                }
            }
        }
        Self {
            column_var,
            column_symbol,
            column_names,
        }
    }

    pub fn width(&self) -> usize {
        self.column_var.len()
    }

    pub fn encode(&self, t: &TestInput) -> Vec<f64> {
        self.column_var
            .iter()
            .zip(&self.column_symbol)
            .map(|(&var, sym)| match (sym, t.0[var]) {
                (None, v) => v.as_f64(),
                (Some(s), Value::Symbol(x)) => f64::from(u8::from(*s == x)),
                (Some(_), Value::Real(_)) => 0.0,
            })
            .collect()
    }

    pub fn encode_all<'a>(&self, inputs: impl IntoIterator<Item = &'a TestInput>) -> Vec<Vec<f64>> {
        inputs.into_iter().map(|t| self.encode(t)).collect()
    }
}
