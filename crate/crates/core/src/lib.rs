//! Test generation for building interpretable failure models of systems
//! with numeric inputs.
//!
//! The pipeline has three stages: a preprocessing phase builds a balanced
//! executed dataset ([`sampling`]); a generation strategy extends it
//! ([`generators`]), either gating executions with surrogate fitness models
//! or steering sampling towards pass/fail boundaries ([`models`]); finally a
//! rule learner turns the dataset into IF-condition-THEN-verdict rules
//! ([`rules`]). [`evaluation`] measures and compares the resulting models.

pub mod budget;
pub mod error;
pub mod evaluation;
pub mod generators;
pub mod models;
pub mod rng;
pub mod rules;
pub mod sampling;
pub mod space;
pub mod subjects;

pub use budget::{Charge, ExecutionBudget};
pub use error::{Error, Result};
pub use space::{
    verdict, Fitness, FitnessRange, InputSpace, InputVariable, LabeledDataset, LabeledRow, Source,
    TestInput, Value, VarKind, Verdict,
};
pub use subjects::{builtin_catalog, Subject, SubjectCatalog, SubjectRegistry};
