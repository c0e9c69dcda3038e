//! Metrics, Pareto fronts, statistical comparison and experiment sweeps.

mod experiment;
mod metrics;
mod pareto;
mod stats;

pub use experiment::{
    labelled_test_set, mean, median, run_experiment, select_feature_sets, tune_rule_learner, BudgetSpec,
    ExperimentPlan, ExperimentReport, FeaturePolicy, FeatureSelection, PairComparison, RunMetrics, RunRecord,
    SelectionConfig, SelectionRow, StrategySummary, SubjectSummary, SuiteSummary,
};
pub use metrics::{evaluate_model, mislabel_count, Classifier, MetricReport, TreeClassifier};
pub use pareto::{pareto_front, ParetoPoint};
pub use stats::{a12, compare, magnitude, wilcoxon_rank_sum, ComparisonResult, Magnitude, EXACT_LIMIT};
