use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Deserialize;

use metaevolve::bench::{
    build_report, emit_reports, load_results, read_t1, resolve_algorithm, run_campaign, BenchError, CampaignConfig,
};
use metaevolve::engine::{log_path, run, RunConfig};
use metaevolve::llm::{HttpClient, LlmClient, LlmConfig, ScriptedClient};
use metaevolve::meta::{meta_train, training_suite, MetaError, MetaOptions, ScoreSettings};
use metaevolve::problems::oracle::max_deviation;
use metaevolve::problems::{resolve, Cec2010Function, Cec2010Problem};

#[derive(Parser)]
#[command(name = "metaevolve", version, about = "Evolve and benchmark constrained-optimization update rules")]
struct Cli {
    #[command(flatten)]
    global: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// TOML file with optional [bench], [llm] and [meta] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long = "max-fe", global = true)]
    max_fe: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory with official shift/rotation files.
    #[arg(long = "data-dir", global = true)]
    data_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark campaigns.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Rule evolution.
    Meta {
        #[command(subcommand)]
        action: MetaAction,
    },
    /// One run of one algorithm on one problem.
    Solve {
        #[arg(long)]
        problem: String,
        /// `de`, `lshade`, `ga`, `rule:<name>`, `rule-file:<path>` or `archive:<path>`.
        #[arg(long, default_value = "de")]
        algorithm: String,
        #[arg(long)]
        population: Option<usize>,
    },
    /// Compare every CEC2010 instance against the reference evaluator.
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
}

#[derive(Subcommand)]
enum BenchAction {
    /// Execute missing runs, then write the reports.
    Run,
    /// Rebuild the reports from the logs on disk.
    Report,
}

#[derive(Subcommand)]
enum MetaAction {
    Train {
        /// Use canned responses from these files instead of the network.
        #[arg(long = "fixture")]
        fixtures: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MetaSection {
    iterations: usize,
    rules_per_iteration: usize,
    suite_size: usize,
    suite_dim: usize,
    seed: u64,
    elites: usize,
    runs_per_problem: usize,
    inner_budget: u64,
    population: usize,
    out_dir: PathBuf,
}

impl Default for MetaSection {
    fn default() -> Self {
        let score = ScoreSettings::default();
        MetaSection {
            iterations: 10,
            rules_per_iteration: 3,
            suite_size: 4,
            suite_dim: 10,
            seed: 1,
            elites: 3,
            runs_per_problem: score.runs_per_problem,
            inner_budget: score.inner_budget,
            population: score.population,
            out_dir: PathBuf::from("meta"),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    bench: CampaignConfig,
    llm: LlmConfig,
    meta: MetaSection,
}

enum Failure {
    Config(String),
    Partial(String),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io { .. } | BenchError::Csv { .. } => Failure::Partial(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<MetaError> for Failure {
    fn from(e: MetaError) -> Self {
        match e {
            MetaError::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Partial(e.to_string()),
        }
    }
}

fn load_config(o: &Overrides) -> Result<FileConfig, Failure> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let b = &mut cfg.bench;
    if let Some(s) = o.seed {
        b.base_seed = s;
        cfg.meta.seed = s;
    }
    if let Some(r) = o.runs {
        b.runs = r;
    }
    if let Some(d) = o.dim {
        b.dim = d;
    }
    if o.max_fe.is_some() {
        b.max_fe = o.max_fe;
    }
    if let Some(out) = &o.out {
        b.out_dir = out.clone();
        cfg.meta.out_dir = out.clone();
    }
    if let Some(j) = o.jobs {
        b.jobs = j;
    }
    if o.data_dir.is_some() {
        b.data_dir = o.data_dir.clone();
    }
    Ok(cfg)
}

fn report(config: &CampaignConfig) -> Result<bool, Failure> {
    let results = load_results(config)?;
    let report = build_report(config, &results, &read_t1(&config.out_dir));
    let files = emit_reports(&report, &config.out_dir)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    for (algo, problem, seed) in &results.missing {
        warn!("missing run {algo}/{problem}/{seed}");
    }
    Ok(results.missing.is_empty())
}

fn bench_run(config: &CampaignConfig) -> Result<(), Failure> {
    let outcome = run_campaign(config)?;
    println!("executed {} runs, skipped {} already on disk", outcome.executed, outcome.skipped);
    for f in &outcome.failures {
        eprintln!("run {}/{}/{} failed: {}", f.algorithm, f.problem, f.seed, f.message);
    }
    let complete = report(config)?;
    if !outcome.failures.is_empty() || !complete {
        return Err(Failure::Partial(format!("{} runs failed", outcome.failures.len())));
    }
    Ok(())
}

fn meta(cfg: &FileConfig, fixtures: &[PathBuf]) -> Result<(), Failure> {
    let m = &cfg.meta;
    let client: Box<dyn LlmClient> = if fixtures.is_empty() {
        if cfg.llm.endpoint.is_empty() || cfg.llm.model.is_empty() {
            return Err(Failure::Config("[llm] endpoint and model are required without --fixture".into()));
        }
        Box::new(HttpClient::from_env(cfg.llm.clone()).map_err(|e| Failure::Config(e.to_string()))?)
    } else {
        let texts = fixtures
            .iter()
            .map(|p| fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        Box::new(ScriptedClient::new(texts).map_err(|e| Failure::Config(e.to_string()))?)
    };
    let suite = training_suite(m.seed, m.suite_size, m.suite_dim).map_err(|e| Failure::Config(e.to_string()))?;
    let options = MetaOptions {
        score: ScoreSettings {
            runs_per_problem: m.runs_per_problem,
            inner_budget: m.inner_budget,
            population: m.population,
        },
        elites: m.elites,
        model: if cfg.llm.model.is_empty() { "scripted".into() } else { cfg.llm.model.clone() },
        temperature: cfg.llm.temperature,
        max_tokens: cfg.llm.max_tokens,
        out_dir: Some(m.out_dir.clone()),
        ..MetaOptions::default()
    };
    let archive = meta_train(client.as_ref(), &suite, m.iterations, m.rules_per_iteration, m.seed, &options)?;
    for e in &archive.events {
        info!("iteration {} {}: {}", e.iteration, e.kind, e.message);
    }
    println!("{} rules evaluated over {} iterations", archive.history.len(), archive.iterations_done);
    for (i, r) in archive.elites.iter().enumerate() {
        println!("elite {} (score {:.4}):\n{}", i + 1, r.aggregate.unwrap_or(f64::NAN), r.text);
    }
    println!("archive: {}", m.out_dir.join("archive.json").display());
    Ok(())
}

fn solve(cfg: &CampaignConfig, problem: &str, algorithm: &str, population: Option<usize>) -> Result<(), Failure> {
    let p = resolve(problem, cfg.dim, cfg.data_dir.as_deref(), cfg.require_official)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let alg = resolve_algorithm(algorithm, cfg.dim, population.or(cfg.population))?;
    let config = RunConfig::new(alg.algorithm, alg.population, cfg.max_fe(), cfg.base_seed);
    let log = run(&*p, &config).map_err(|e| Failure::Config(e.to_string()))?;
    let path = log_path(&cfg.out_dir, &alg.label, problem, cfg.base_seed);
    log.write(&path).map_err(|e| Failure::Partial(format!("{}: {e}", path.display())))?;
    let s = &log.summary;
    println!(
        "{} on {}: best f = {:e}, cv = {:e}, feasible = {}, {} evaluations",
        alg.label, problem, s.best_f, s.best_cv, s.feasible, s.fe_used
    );
    println!("log: {}", path.display());
    Ok(())
}

fn oracle_check(cfg: &CampaignConfig, points: usize, tolerance: f64) -> Result<(), Failure> {
    let mut bad = 0;
    for func in Cec2010Function::all() {
        let p = Cec2010Problem::load(func, cfg.dim, cfg.data_dir.as_deref(), cfg.require_official)
            .map_err(|e| Failure::Config(e.to_string()))?;
        let dev = max_deviation(&p, points, cfg.base_seed);
        let ok = dev <= tolerance;
        bad += usize::from(!ok);
        println!("{} {:e} {}", func.id(), dev, if ok { "ok" } else { "MISMATCH" });
    }
    if bad > 0 {
        return Err(Failure::Partial(format!("{bad} problems disagree with the reference")));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli.global)?;
    match &cli.command {
        Command::Bench { action } => {
            cfg.bench.validate()?;
            match action {
                BenchAction::Run => bench_run(&cfg.bench),
                BenchAction::Report => match report(&cfg.bench)? {
                    true => Ok(()),
                    false => Err(Failure::Partial("some runs are missing".into())),
                },
            }
        }
        Command::Meta {
            action: MetaAction::Train { fixtures },
        } => meta(&cfg, fixtures),
        Command::Solve {
            problem,
            algorithm,
            population,
        } => solve(&cfg.bench, problem, algorithm, *population),
        Command::OracleCheck { points, tolerance } => oracle_check(&cfg.bench, *points, *tolerance),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // bad arguments are configuration errors (1), not clap's default 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
