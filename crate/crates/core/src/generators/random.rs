//! Adaptive random search baseline.

use super::{GenerationResult, GeneratorConfig, Run};
use crate::budget::ExecutionBudget;
use crate::error::Result;
use crate::rng::Rng;
use crate::sampling::adaptive_random;
use crate::space::TestInput;
use crate::subjects::Subject;

pub fn run_random_search(
    subject: &dyn Subject,
    cfg: &GeneratorConfig,
    budget: &mut ExecutionBudget,
    rng: &mut Rng,
) -> Result<GenerationResult> {
    let mut run = Run::start(subject, cfg, budget, rng)?;
    let space = subject.space().clone();
    let mut seen: Vec<TestInput> = run.dataset.inputs().cloned().collect();
    while !budget.is_exhausted() && run.dataset.len() < cfg.max_rows {
        run.iteration += 1;
        let t = adaptive_random(&space, 1, &seen, cfg.sampler.adaptive_candidates, rng).remove(0);
        seen.push(t.clone());
        if !run.execute(t, budget)? {
            break;
        }
    }
    Ok(run.finish(cfg.strategy.name(), None, None))
}
