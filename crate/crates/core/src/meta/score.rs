use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{MetaArchive, MetaError, ProblemScore, RuleRecord};
use crate::engine::{run, Algorithm, RunConfig};
use crate::problems::SharedProblem;
use crate::rng::mix;
use crate::ruledsl::{parse_source, print, RuleSource};

/// Inner-loop fidelity used while scoring candidate rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSettings {
    pub runs_per_problem: usize,
    pub inner_budget: u64,
    pub population: usize,
}

impl Default for ScoreSettings {
    fn default() -> Self {
        ScoreSettings {
            runs_per_problem: 3,
            inner_budget: 5000,
            population: 50,
        }
    }
}

/// Runs the rule on every problem and replicate and returns its record.
///
/// Replicate seeds depend only on `seed`, the problem position and the
/// replicate index, so every rule scored with the same seed faces the same
/// initial populations. The aggregate is relative to the rule alone; it
/// becomes meaningful once the record joins an archive.
pub fn score_rule(
    source: &RuleSource,
    problems: &[SharedProblem],
    settings: &ScoreSettings,
    seed: u64,
    meta_iteration: usize,
) -> Result<RuleRecord, MetaError> {
    if settings.runs_per_problem == 0 {
        return Err(MetaError::Config("runs_per_problem must be at least 1".into()));
    }
    let rule = match parse_source(source) {
        Ok(rule) => rule,
        Err(e) => {
            return Ok(RuleRecord {
                text: source.text.clone(),
                origin: source.origin,
                per_problem: BTreeMap::new(),
                aggregate: None,
                meta_iteration,
                parse_failure: Some(e.to_string()),
            })
        }
    };
    let algorithm = Algorithm::rule("candidate", rule.clone());
    let jobs: Vec<(usize, u64)> = (0..problems.len())
        .flat_map(|p| (0..settings.runs_per_problem as u64).map(move |r| (p, r)))
        .collect();
    let summaries = jobs
        .par_iter()
        .map(|&(p, r)| {
            let config = RunConfig::new(
                algorithm.clone(),
                settings.population,
                settings.inner_budget,
                mix(seed, ((p as u64) << 32) | r),
            );
            run(&*problems[p], &config).map(|log| (p, log.summary))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut per_problem = BTreeMap::new();
    for (p, problem) in problems.iter().enumerate() {
        let runs: Vec<_> = summaries.iter().filter(|(q, _)| *q == p).map(|(_, s)| s).collect();
        let n = runs.len() as f64;
        let feasible: Vec<f64> = runs.iter().filter(|s| s.feasible).map(|s| s.best_f).collect();
        per_problem.insert(
            problem.spec().id.clone(),
            ProblemScore {
                feasibility_rate: feasible.len() as f64 / n,
                mean_best_f: (!feasible.is_empty()).then(|| feasible.iter().sum::<f64>() / feasible.len() as f64),
                mean_final_cv: runs.iter().map(|s| s.best_cv).sum::<f64>() / n,
            },
        );
    }
    let mut record = RuleRecord {
        text: print(&rule),
        origin: source.origin,
        per_problem,
        aggregate: None,
        meta_iteration,
        parse_failure: None,
    };
    let mut alone = MetaArchive::new(1);
    alone.push(record.clone());
    record.aggregate = alone.history[0].aggregate;
    Ok(record)
}
