//! The generational loop shared by every algorithm.
//!
//! Each generation produces one offspring per parent, evaluates them all,
//! and keeps the best of parents plus offspring under the feasibility rule.
//! A generation only starts if its full batch of evaluations fits in the
//! budget, so runs never overspend.

mod baselines;
mod log;

use std::collections::HashSet;
use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::constraint::{best_index, feasibility_order, select_best, Individual, Population};
use crate::problems::{BudgetedEvaluator, Problem, ProblemError, ProblemSpec};
use crate::rng::RunRng;
use crate::ruledsl::{interpret, RuleAst, RuleContext};

pub use baselines::{GaParams, LshadeParams};
pub use log::{LogEntry, RunLog, RunSummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// What produces offspring.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    /// A DSL rule, labelled for logs.
    Rule { name: String, rule: RuleAst },
    /// Natively coded DE/rand/1/bin.
    De { f: f64, cr: f64 },
    Lshade(LshadeParams),
    Ga(GaParams),
}

impl Algorithm {
    pub fn rule(name: impl Into<String>, rule: RuleAst) -> Self {
        Algorithm::Rule {
            name: name.into(),
            rule,
        }
    }

    pub fn de() -> Self {
        Algorithm::De { f: 0.5, cr: 0.9 }
    }

    pub fn label(&self) -> String {
        match self {
            Algorithm::Rule { name, .. } => name.clone(),
            Algorithm::De { .. } => "de".into(),
            Algorithm::Lshade(_) => "lshade".into(),
            Algorithm::Ga(_) => "ga".into(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Initial population size N.
    pub population: usize,
    pub max_fe: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Record every k-th generation; the last one is always recorded.
    pub log_every: usize,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, population: usize, max_fe: u64, seed: u64) -> Self {
        RunConfig {
            population,
            max_fe,
            seed,
            algorithm,
            log_every: 1,
        }
    }

    fn validate(&self, spec: &ProblemSpec) -> Result<(), RunError> {
        let min = match self.algorithm {
            Algorithm::Ga(_) => 2,
            _ => 4,
        };
        if self.population < min {
            return Err(RunError::Config(format!(
                "population {} is below the minimum of {min} for {}",
                self.population, self.algorithm
            )));
        }
        if self.max_fe < self.population as u64 {
            return Err(RunError::Config(format!(
                "max_fe {} cannot pay for an initial population of {}",
                self.max_fe, self.population
            )));
        }
        if self.log_every == 0 {
            return Err(RunError::Config("log_every must be positive".into()));
        }
        spec.validate()?;
        Ok(())
    }
}

/// Usual population size for a dimension.
pub fn default_population(dim: usize) -> usize {
    if dim <= 10 {
        100
    } else {
        200
    }
}

/// Generation-level hooks of an algorithm.
pub(crate) trait Operator {
    /// One candidate per member, index-aligned with `pop.members`.
    fn offspring(&mut self, pop: &Population, spec: &ProblemSpec, rng: &mut RunRng, stats: &mut RunStats) -> Vec<Vec<f64>>;

    /// Sees parents and their evaluated offspring before selection.
    fn observe(&mut self, _parents: &[Individual], _offspring: &[Individual], _rng: &mut RunRng) {}

    /// Survivor count for the next generation.
    fn survivors(&mut self, current: usize, _fe: u64, _max_fe: u64, _rng: &mut RunRng) -> usize {
        current
    }
}

#[derive(Debug, Default)]
pub(crate) struct RunStats {
    pub resampled: u64,
    pub events: Vec<String>,
}

struct RuleOperator<'r> {
    rule: &'r RuleAst,
}

impl Operator for RuleOperator<'_> {
    fn offspring(&mut self, pop: &Population, spec: &ProblemSpec, rng: &mut RunRng, stats: &mut RunStats) -> Vec<Vec<f64>> {
        let best = &pop.members[best_index(&pop.members).expect("non-empty population")];
        let mean = pop.centroid();
        (0..pop.len())
            .map(|target| {
                let mut ctx = RuleContext {
                    target,
                    members: &pop.members,
                    best,
                    mean: &mean,
                    lower: &spec.lower,
                    upper: &spec.upper,
                    rng: &mut *rng,
                };
                let out = interpret(self.rule, &mut ctx);
                stats.resampled += out.resampled as u64;
                out.offspring
            })
            .collect()
    }
}

pub fn run(problem: &dyn Problem, config: &RunConfig) -> Result<RunLog, RunError> {
    run_observed(problem, config, &mut |_| {})
}

/// Like [`run`], calling `observer` with the population after
/// initialization and after every generation.
pub fn run_observed(
    problem: &dyn Problem,
    config: &RunConfig,
    observer: &mut dyn FnMut(&Population),
) -> Result<RunLog, RunError> {
    config.validate(problem.spec())?;
    match &config.algorithm {
        Algorithm::Rule { rule, .. } => drive(problem, config, &mut RuleOperator { rule }, observer),
        Algorithm::De { f, cr } => drive(problem, config, &mut baselines::De { f: *f, cr: *cr }, observer),
        Algorithm::Lshade(p) => drive(
            problem,
            config,
            &mut baselines::Lshade::new(*p, config.population, problem.spec().dim),
            observer,
        ),
        Algorithm::Ga(p) => drive(problem, config, &mut baselines::Ga::new(*p, problem.spec().dim), observer),
    }
}

fn with_algorithm(config: &RunConfig, algorithm: Algorithm) -> RunConfig {
    RunConfig {
        algorithm,
        ..config.clone()
    }
}

/// DE/rand/1/bin with F = 0.5, CR = 0.9; `config.algorithm` is ignored.
pub fn run_baseline_de(problem: &dyn Problem, config: &RunConfig) -> Result<RunLog, RunError> {
    run(problem, &with_algorithm(config, Algorithm::de()))
}

/// Success-history adaptive DE with linear population reduction.
pub fn run_baseline_lshade(problem: &dyn Problem, config: &RunConfig) -> Result<RunLog, RunError> {
    run(problem, &with_algorithm(config, Algorithm::Lshade(LshadeParams::default())))
}

/// Real-coded GA: SBX, polynomial mutation, binary tournaments.
pub fn run_baseline_ga(problem: &dyn Problem, config: &RunConfig) -> Result<RunLog, RunError> {
    run(problem, &with_algorithm(config, Algorithm::Ga(GaParams::default())))
}

fn entry(pop: &Population, fe: u64) -> LogEntry {
    let best = pop.best().expect("non-empty population");
    LogEntry {
        generation: pop.generation,
        fe,
        population: pop.len(),
        best_cv: best.cv,
        best_f: best.feasible.then_some(best.f),
    }
}

fn bits(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

fn drive(
    problem: &dyn Problem,
    config: &RunConfig,
    op: &mut dyn Operator,
    observer: &mut dyn FnMut(&Population),
) -> Result<RunLog, RunError> {
    let started = Instant::now();
    let spec = problem.spec();
    let mut rng = RunRng::seed_from_u64(config.seed);
    let mut eval = BudgetedEvaluator::new(problem, config.max_fe);
    let mut stats = RunStats::default();

    let mut members = Vec::with_capacity(config.population);
    for _ in 0..config.population {
        members.push(eval.evaluate(spec.sample_uniform(&mut rng))?);
    }
    let mut pop = Population::new(members);
    observer(&pop);
    let mut entries = vec![entry(&pop, eval.budget().used)];
    if !eval.budget().fits(pop.len() as u64) {
        stats.events.push(format!(
            "warning: budget of {} evaluations is exhausted by initialization; no generations run",
            config.max_fe
        ));
    }

    while eval.budget().fits(pop.len() as u64) {
        let candidates = op.offspring(&pop, spec, &mut rng, &mut stats);
        debug_assert_eq!(candidates.len(), pop.len());
        let mut offspring = Vec::with_capacity(candidates.len());
        for mut x in candidates {
            spec.clamp(&mut x);
            offspring.push(eval.evaluate(x)?);
        }
        op.observe(&pop.members, &offspring, &mut rng);

        // An offspring identical to a parent adds nothing to the union and
        // would otherwise be able to crowd that parent's other copies out.
        let parents: HashSet<Vec<u64>> = pop.members.iter().map(|m| bits(&m.x)).collect();
        let keep = op.survivors(pop.len(), eval.budget().used, config.max_fe, &mut rng);
        let mut union = std::mem::take(&mut pop.members);
        union.extend(offspring.into_iter().filter(|o| !parents.contains(&bits(&o.x))));
        pop = Population {
            members: select_best(union, keep),
            generation: pop.generation + 1,
        };
        observer(&pop);
        if pop.generation.is_multiple_of(config.log_every) {
            entries.push(entry(&pop, eval.budget().used));
        }
    }
    if entries.last().map(|e| e.generation) != Some(pop.generation) {
        entries.push(entry(&pop, eval.budget().used));
    }

    let best = pop.best().expect("non-empty population").clone();
    let summary = RunSummary {
        algorithm: config.algorithm.label(),
        problem: spec.id.clone(),
        data_source: problem.data_source().map(|s| s.tag().to_string()),
        seed: config.seed,
        initial_population: config.population,
        max_fe: config.max_fe,
        fe_used: eval.budget().used,
        generations: pop.generation,
        final_population: pop.len(),
        final_feasible: pop.feasible_count(),
        best_x: best.x.clone(),
        best_f: best.f,
        best_cv: best.cv,
        feasible: best.feasible,
        resampled: stats.resampled,
        events: stats.events,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(RunLog { entries, summary })
}

/// Ordering helper for callers comparing run outcomes: feasible runs by
/// objective, then infeasible runs by violation.
pub fn outcome_order(a: &RunSummary, b: &RunSummary) -> std::cmp::Ordering {
    let ia = Individual::with_scores(Vec::new(), a.best_cv, a.best_f);
    let ib = Individual::with_scores(Vec::new(), b.best_cv, b.best_f);
    feasibility_order(&ia, &ib)
}

/// Where a run's log lives inside an output directory.
pub fn log_path(out: &std::path::Path, algorithm: &str, problem: &str, seed: u64) -> std::path::PathBuf {
    out.join("runs").join(algorithm).join(problem).join(format!("{seed}.jsonl"))
}
