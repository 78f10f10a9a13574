//! Multi-run benchmark campaigns and their statistics and reports.

mod report;
mod stats;
mod timing;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{default_population, log_path, run, Algorithm, GaParams, LshadeParams, RunConfig, RunLog, RunSummary};
use crate::meta::{select_deployment_rule, MetaArchive, MetaError};
use crate::problems::{resolve, Cec2010Function, ProblemError, SharedProblem};
use crate::ruledsl::{builtin_rule, parse, RuleError};

pub use report::{build_report, emit_reports, format_cell, read_summaries, Report, REPORT_FILES};
pub use stats::{rank_sum_p, significance_mark, summarize_bests, Mark, StatsSummary};
pub use timing::{measure_t1, normalize, timing_report, TimingReport, TimingRow, T1_EVALUATIONS};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("campaign configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("rule in {source_name}: {error}")]
    Rule { source_name: String, error: RuleError },
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Evaluation budget of the standard protocol for a dimension.
pub fn protocol_max_fe(dim: usize) -> u64 {
    match dim {
        10 => 200_000,
        30 => 600_000,
        d => 20_000 * d as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    /// Tags: `de`, `lshade`, `ga`, `rule:<builtin>`, `rule-file:<path>`,
    /// `archive:<path to archive.json>`.
    pub algorithms: Vec<String>,
    /// Problem ids, or `all` for C01..C18.
    pub problems: Vec<String>,
    pub dim: usize,
    pub runs: usize,
    /// Defaults to the protocol budget for `dim`.
    pub max_fe: Option<u64>,
    pub base_seed: u64,
    /// Population for every algorithm except LSHADE, which starts at 18·D.
    pub population: Option<usize>,
    /// Column the significance marks compare against; the first algorithm
    /// by default.
    pub reference: Option<String>,
    pub alpha: f64,
    pub data_dir: Option<PathBuf>,
    pub require_official: bool,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub out_dir: PathBuf,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            algorithms: vec!["de".into(), "lshade".into(), "ga".into()],
            problems: vec!["all".into()],
            dim: 10,
            runs: 31,
            max_fe: None,
            base_seed: 1,
            population: None,
            reference: None,
            alpha: 0.05,
            data_dir: None,
            require_official: false,
            jobs: 0,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl CampaignConfig {
    pub fn max_fe(&self) -> u64 {
        self.max_fe.unwrap_or_else(|| protocol_max_fe(self.dim))
    }

    pub fn problem_ids(&self) -> Vec<String> {
        let mut ids = Vec::new();
        for p in &self.problems {
            if p == "all" {
                ids.extend(Cec2010Function::all().map(|f| f.id()));
            } else {
                ids.push(p.clone());
            }
        }
        ids
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.runs as u64).map(move |i| self.base_seed + i)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.algorithms.is_empty() || self.problems.is_empty() {
            return Err(BenchError::Config("algorithms and problems must be non-empty".into()));
        }
        if self.runs < 2 {
            return Err(BenchError::Config(format!("runs = {} but statistics need at least 2", self.runs)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BenchError::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// An algorithm tag resolved to something runnable.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAlgorithm {
    /// Path-safe name used in file layouts and report columns.
    pub label: String,
    pub algorithm: Algorithm,
    pub population: usize,
}

fn rule_from_file(path: &Path) -> Result<crate::ruledsl::RuleAst, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse(&text).map_err(|error| BenchError::Rule {
        source_name: path.display().to_string(),
        error,
    })
}

pub fn resolve_algorithm(tag: &str, dim: usize, population: Option<usize>) -> Result<ResolvedAlgorithm, BenchError> {
    let n = population.unwrap_or_else(|| default_population(dim));
    let (label, algorithm, population) = if tag == "de" {
        ("de".to_string(), Algorithm::de(), n)
    } else if tag == "lshade" {
        (
            "lshade".to_string(),
            Algorithm::Lshade(LshadeParams::default()),
            LshadeParams::initial_population(dim),
        )
    } else if tag == "ga" {
        ("ga".to_string(), Algorithm::Ga(GaParams::default()), n)
    } else if let Some(name) = tag.strip_prefix("rule:") {
        let rule = builtin_rule(name).ok_or_else(|| BenchError::Config(format!("unknown builtin rule `{name}`")))?;
        let label = format!("rule-{name}");
        (label.clone(), Algorithm::rule(label, rule), n)
    } else if let Some(path) = tag.strip_prefix("rule-file:") {
        let path = Path::new(path);
        let rule = rule_from_file(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("file");
        let label = format!("rule-{stem}");
        (label.clone(), Algorithm::rule(label, rule), n)
    } else if let Some(path) = tag.strip_prefix("archive:") {
        let archive = MetaArchive::load(Path::new(path))?;
        let rule = select_deployment_rule(&archive)?;
        ("llmea".to_string(), Algorithm::rule("llmea", rule), n)
    } else {
        return Err(BenchError::Config(format!("unknown algorithm tag `{tag}`")));
    };
    Ok(ResolvedAlgorithm {
        label,
        algorithm,
        population,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFailure {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignOutcome {
    pub executed: usize,
    pub skipped: usize,
    pub failures: Vec<CellFailure>,
}

fn t1_path(out: &Path) -> PathBuf {
    out.join("t1.json")
}

fn resolve_all(config: &CampaignConfig) -> Result<(Vec<ResolvedAlgorithm>, Vec<SharedProblem>), BenchError> {
    config.validate()?;
    let algorithms = config
        .algorithms
        .iter()
        .map(|t| resolve_algorithm(t, config.dim, config.population))
        .collect::<Result<Vec<_>, _>>()?;
    let mut labels: Vec<&str> = algorithms.iter().map(|a| a.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(BenchError::Config("two algorithm tags map to the same label".into()));
    }
    let problems = config
        .problem_ids()
        .iter()
        .map(|id| resolve(id, config.dim, config.data_dir.as_deref(), config.require_official))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((algorithms, problems))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, BenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))
}

/// Runs every (algorithm, problem, seed) cell whose log is not already on
/// disk. A failing cell is recorded and the rest carry on.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutcome, BenchError> {
    let (algorithms, problems) = resolve_all(config)?;
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;

    let mut cells = Vec::new();
    let mut skipped = 0;
    for a in &algorithms {
        for p in &problems {
            for seed in config.seeds() {
                let path = log_path(out, &a.label, &p.spec().id, seed);
                if RunLog::read(&path).is_ok() {
                    skipped += 1;
                } else {
                    cells.push((a, p, seed, path));
                }
            }
        }
    }

    let max_fe = config.max_fe();
    let failures: Vec<CellFailure> = pool(config.jobs)?.install(|| {
        cells
            .par_iter()
            .filter_map(|(a, p, seed, path)| {
                let mut rc = RunConfig::new(a.algorithm.clone(), a.population, max_fe, *seed);
                rc.log_every = 100;
                let result = catch_unwind(AssertUnwindSafe(|| run(&***p, &rc)));
                let message = match result {
                    Ok(Ok(log)) => match log.write(path) {
                        Ok(()) => return None,
                        Err(e) => format!("writing {}: {e}", path.display()),
                    },
                    Ok(Err(e)) => e.to_string(),
                    Err(_) => "run panicked".to_string(),
                };
                log::warn!("{} on {} seed {seed} failed: {message}", a.label, p.spec().id);
                Some(CellFailure {
                    algorithm: a.label.clone(),
                    problem: p.spec().id.clone(),
                    seed: *seed,
                    message,
                })
            })
            .collect()
    });

    let mut t1 = read_t1(out);
    for p in &problems {
        t1.entry(p.spec().id.clone()).or_insert_with(|| measure_t1(&**p, 0));
    }
    let path = t1_path(out);
    let text = serde_json::to_string_pretty(&t1).expect("t1 map serializes");
    fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;

    Ok(CampaignOutcome {
        executed: cells.len() - failures.len(),
        skipped,
        failures,
    })
}

/// Stored T1 measurements, keyed by problem id.
pub fn read_t1(out: &Path) -> BTreeMap<String, f64> {
    fs::read_to_string(t1_path(out))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default()
}

/// Completed run summaries of a campaign, in seed order per cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignResults {
    pub algorithms: Vec<String>,
    pub problems: Vec<String>,
    pub cells: BTreeMap<(String, String), Vec<RunSummary>>,
    pub missing: Vec<(String, String, u64)>,
}

impl CampaignResults {
    pub fn runs(&self, algorithm: &str, problem: &str) -> &[RunSummary] {
        self.cells
            .get(&(algorithm.to_string(), problem.to_string()))
            .map_or(&[], Vec::as_slice)
    }

    /// Best-of-run objectives; `None` for runs that ended infeasible.
    pub fn bests(&self, algorithm: &str, problem: &str) -> Vec<Option<f64>> {
        self.runs(algorithm, problem)
            .iter()
            .map(|s| s.feasible.then_some(s.best_f))
            .collect()
    }

    /// Mean wall seconds per cell.
    pub fn walls(&self) -> BTreeMap<(String, String), f64> {
        self.cells
            .iter()
            .filter(|(_, runs)| !runs.is_empty())
            .map(|(k, runs)| (k.clone(), runs.iter().map(|r| r.wall_seconds).sum::<f64>() / runs.len() as f64))
            .collect()
    }
}

pub fn load_results(config: &CampaignConfig) -> Result<CampaignResults, BenchError> {
    config.validate()?;
    let algorithms = config
        .algorithms
        .iter()
        .map(|t| resolve_algorithm(t, config.dim, config.population).map(|a| a.label))
        .collect::<Result<Vec<_>, _>>()?;
    let problems = config.problem_ids();
    let mut results = CampaignResults {
        algorithms: algorithms.clone(),
        problems: problems.clone(),
        ..CampaignResults::default()
    };
    for a in &algorithms {
        for p in &problems {
            let mut runs = Vec::new();
            for seed in config.seeds() {
                match RunLog::read(&log_path(&config.out_dir, a, p, seed)) {
                    Ok(log) => runs.push(log.summary),
                    Err(_) => results.missing.push((a.clone(), p.clone(), seed)),
                }
            }
            results.cells.insert((a.clone(), p.clone()), runs);
        }
    }
    Ok(results)
}

/// Statistics of one cell; `None` if it has no completed runs.
pub fn summarize(results: &CampaignResults, algorithm: &str, problem: &str) -> Option<StatsSummary> {
    let bests = results.bests(algorithm, problem);
    (!bests.is_empty()).then(|| summarize_bests(&bests))
}
