//! Run configuration: a JSON document, environment and flag overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use failscope::evaluation::{BudgetSpec, FeaturePolicy, SelectionConfig};
use failscope::generators::{GeneratorConfig, Strategy};
use failscope::rules::RipperParams;
use failscope::subjects::SubjectRegistry;
use failscope::Subject;
use std::sync::Arc;

use crate::{CliError, CliResult};

pub const SEED_ENV: &str = "FAILSCOPE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subject: String,
    /// Subject constructor parameters; `null` for defaults.
    pub subject_params: serde_json::Value,
    pub generator: GeneratorConfig,
    pub budget: BudgetSpec,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub feature_policy: FeaturePolicy,
    pub ripper: RipperParams,
    pub selection: SelectionConfig,
    /// When set, overrides the initial dataset size with this share of the
    /// execution budget.
    pub preprocessing_share: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subject: "sum_cap".into(),
            subject_params: serde_json::Value::Null,
            generator: GeneratorConfig::default(),
            budget: BudgetSpec::default(),
            seeds: vec![0],
            out: PathBuf::from("out"),
            feature_policy: FeaturePolicy::default(),
            ripper: RipperParams::default(),
            selection: SelectionConfig::default(),
            preprocessing_share: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strategy: Option<String>,
    pub subject: Option<String>,
    pub budget_execs: Option<usize>,
    pub budget_time: Option<f64>,
    pub exec_cost: Option<f64>,
    pub feature_policy: Option<FeaturePolicy>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Load (or default), then apply the seed variable and the flags.
    pub fn load(path: Option<&Path>, env_seed: Option<String>, ov: &Overrides) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(s) = env_seed {
            let seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{s}`")))?;
            cfg.seeds = vec![seed];
        }
        if let Some(seed) = ov.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(o) = &ov.out {
            cfg.out = o.clone();
        }
        if let Some(s) = &ov.strategy {
            cfg.generator.strategy = s.parse::<Strategy>().map_err(CliError::config)?;
        }
        if let Some(s) = &ov.subject {
            cfg.subject = s.clone();
        }
        if let Some(n) = ov.budget_execs {
            cfg.budget.max_executions = n;
        }
        if let Some(t) = ov.budget_time {
            cfg.budget.max_simulated_time = Some(t);
        }
        if let Some(c) = ov.exec_cost {
            cfg.budget.exec_cost = Some(c);
        }
        if let Some(p) = ov.feature_policy {
            cfg.feature_policy = p;
        }
        Ok(cfg)
    }

    /// Everything that can be checked without running anything.
    pub fn validate(&self) -> CliResult<()> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        self.subject()?;
        self.generator_config()?.validate()?;
        self.ripper.validate()?;
        Ok(())
    }

    pub fn subject(&self) -> CliResult<Arc<dyn Subject>> {
        Ok(SubjectRegistry::default().build(&self.subject, &self.subject_params)?)
    }

    pub fn generator_config(&self) -> CliResult<GeneratorConfig> {
        let mut g = self.generator.clone();
        if let Some(share) = self.preprocessing_share {
            if !(share > 0.0 && share < 1.0) {
                return Err(CliError::Config("preprocessing_share must lie in (0, 1)".into()));
            }
            g.sampler.initial_dataset_size = (share * self.budget.max_executions as f64) as usize / 2 * 2;
        }
        Ok(g)
    }
}
