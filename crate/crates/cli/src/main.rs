use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use failscope::evaluation::FeaturePolicy;
use failscope_cli::commands::{self, ModelFile};
use failscope_cli::config::{Overrides, RunConfig, SEED_ENV};
use failscope_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "failscope", version, about = "Test generation for interpretable failure models")]
struct Cli {
    /// JSON run configuration (an experiment plan for `compare`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for `compare`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    strategy: Option<String>,
    #[arg(long, global = true)]
    subject: Option<String>,
    #[arg(long, global = true)]
    budget_execs: Option<usize>,
    #[arg(long, global = true)]
    budget_time: Option<f64>,
    #[arg(long, global = true)]
    exec_cost: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Individual,
    SumSubsets,
    AutoSelect,
}

impl From<Policy> for FeaturePolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Individual => FeaturePolicy::Individual,
            Policy::SumSubsets => FeaturePolicy::SumSubsets,
            Policy::AutoSelect => FeaturePolicy::AutoSelect,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate labelled datasets, one per seed.
    Generate,
    /// Learn a failure model from a dataset file.
    Learn {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        features: Option<Policy>,
    },
    /// Score a rules or tree file on fresh inputs.
    Evaluate {
        #[arg(long, conflicts_with = "tree", required_unless_present = "tree")]
        rules: Option<PathBuf>,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        n_tests: usize,
    },
    /// Run an experiment plan and write the report.
    Compare {
        /// Plan file; defaults to --config.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// List the builtin subjects.
    Subjects,
    /// Recompute Pareto fronts from a report.
    Pareto {
        #[arg(long)]
        report: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let ov = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        strategy: cli.strategy.clone(),
        subject: cli.subject.clone(),
        budget_execs: cli.budget_execs,
        budget_time: cli.budget_time,
        exec_cost: cli.exec_cost,
        feature_policy: None,
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match cli.cmd {
        Cmd::Generate => {
            let cfg = RunConfig::load(cli.config.as_deref(), env_seed, &ov)?;
            for p in commands::cmd_generate(&cfg)? {
                println!("{}", p.display());
            }
        }
        Cmd::Learn { dataset, features } => {
            let ov = Overrides { feature_policy: features.map(Into::into), ..ov };
            let cfg = RunConfig::load(cli.config.as_deref(), env_seed, &ov)?;
            let learned = commands::cmd_learn(&cfg, &dataset)?;
            print!("{}", learned.ruleset.render(&cfg.subject()?.references()));
            println!("{}", learned.rules_json.display());
        }
        Cmd::Evaluate { rules, tree, n_tests } => {
            let cfg = RunConfig::load(cli.config.as_deref(), env_seed, &ov)?;
            let model = match (&rules, &tree) {
                (Some(r), _) => ModelFile::Rules(r),
                (None, Some(t)) => ModelFile::Tree(t),
                (None, None) => return Err(CliError::Config("--rules or --tree is required".into())),
            };
            let m = commands::cmd_evaluate(&cfg, model, n_tests)?;
            println!("{}", serde_json::to_string_pretty(&m).map_err(CliError::runtime)?);
        }
        Cmd::Compare { plan } => {
            let path = plan
                .or(cli.config)
                .ok_or_else(|| CliError::Config("compare needs --plan or --config".into()))?;
            let mut plan = commands::load_plan(&path)?;
            if let Some(w) = cli.workers {
                plan.workers = w;
            }
            if let Some(s) = cli.seed {
                plan.seeds = vec![s];
            } else if let Some(s) = env_seed {
                plan.seeds = vec![s
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer")))?];
            }
            let out = cli.out.unwrap_or_else(|| PathBuf::from("out"));
            let report = commands::cmd_compare(&plan, &out)?;
            for r in report.runs.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "warning: {} {} seed {}: {}",
                    r.subject,
                    r.strategy,
                    r.seed,
                    r.error.as_deref().unwrap_or_default()
                );
            }
            println!("{}", out.join("report.json").display());
        }
        Cmd::Subjects => print!("{}", commands::cmd_subjects()),
        Cmd::Pareto { report } => {
            let (_, md) = commands::cmd_pareto(&report, cli.out.as_deref())?;
            print!("{md}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
