use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use super::{build_prompt_with, extract_rules, score_rule, summarize_problem, MetaArchive, MetaError, PromptOptions, ScoreSettings};
use crate::llm::{LlmClient, LlmRequest};
use crate::problems::{synthesize_training_cop, ProblemError, SharedProblem};
use crate::rng::mix;

#[derive(Debug, Clone, PartialEq)]
pub struct MetaOptions {
    pub score: ScoreSettings,
    pub prompt: PromptOptions,
    /// Elite capacity K.
    pub elites: usize,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Uniform samples behind the feasibility estimate in the prompt.
    pub summary_samples: usize,
    /// Where `archive.json` and `transcripts/` go; an existing archive
    /// there is resumed.
    pub out_dir: Option<PathBuf>,
}

impl Default for MetaOptions {
    fn default() -> Self {
        MetaOptions {
            score: ScoreSettings::default(),
            prompt: PromptOptions::default(),
            elites: 3,
            model: "default".into(),
            temperature: 0.7,
            max_tokens: 4096,
            summary_samples: 2000,
            out_dir: None,
        }
    }
}

/// A varied set of synthetic training problems, deterministic in `seed`.
pub fn training_suite(seed: u64, count: usize, dim: usize) -> Result<Vec<SharedProblem>, ProblemError> {
    const SHAPES: [(usize, usize, f64); 4] = [(2, 0, 0.2), (1, 1, 0.5), (3, 0, 0.05), (2, 1, 0.3)];
    (0..count)
        .map(|k| {
            let (n_ineq, n_eq, target) = SHAPES[k % SHAPES.len()];
            let cop = synthesize_training_cop(mix(seed, k as u64), dim, n_ineq, n_eq, target)?;
            Ok(Arc::new(cop) as SharedProblem)
        })
        .collect()
}

/// Runs the meta-training loop.
///
/// Each iteration samples a training problem round-robin (starting point
/// chosen by `seed`), builds one prompt and queries the client until
/// `rules_per_iteration` rule blocks are collected or as many queries were
/// made. Every rule is scored on the whole suite with the same replicate
/// seeds. A client error skips the iteration without touching the history.
pub fn meta_train(
    client: &dyn LlmClient,
    suite: &[SharedProblem],
    iterations: usize,
    rules_per_iteration: usize,
    seed: u64,
    options: &MetaOptions,
) -> Result<MetaArchive, MetaError> {
    if rules_per_iteration == 0 {
        return Err(MetaError::Config("rules_per_iteration must be at least 1".into()));
    }
    if suite.is_empty() {
        return Err(MetaError::Config("training suite is empty".into()));
    }
    let archive_path = options.out_dir.as_ref().map(|d| d.join("archive.json"));
    let mut archive = match &archive_path {
        Some(p) if p.exists() => MetaArchive::load(p)?,
        _ => MetaArchive::new(options.elites),
    };
    let start = (mix(seed, 0x0FF5E7) % suite.len() as u64) as usize;
    let score_seed = mix(seed, 0x5C0BE);

    for it in archive.iterations_done..iterations {
        let problem = &suite[(start + it) % suite.len()];
        let summary = summarize_problem(&**problem, options.score.population, options.summary_samples, mix(seed, it as u64));
        let sections = build_prompt_with(&archive, &summary, it, &options.prompt);
        let request = LlmRequest {
            model: options.model.clone(),
            system_message: sections.system_message(),
            user_message: sections.user_message(),
            temperature: options.temperature,
            max_tokens: options.max_tokens,
        };
        let mut transcript = format!(
            "=== SYSTEM ===\n{}\n\n=== USER ===\n{}\n",
            request.system_message, request.user_message
        );

        let mut sources = Vec::new();
        let mut skipped = false;
        for q in 0..rules_per_iteration {
            if sources.len() >= rules_per_iteration {
                break;
            }
            match client.complete(&request) {
                Ok(response) => {
                    let _ = write!(transcript, "\n=== RESPONSE {} ===\n{}\n", q + 1, response.text);
                    let extraction = extract_rules(&response.text);
                    for e in extraction.events {
                        archive.log(it, "extraction-failure", e);
                    }
                    sources.extend(extraction.sources);
                }
                Err(e) => {
                    let _ = write!(transcript, "\n=== ERROR ===\n{e}\n");
                    archive.log(it, "llm-error", format!("iteration skipped: {e}"));
                    skipped = true;
                    break;
                }
            }
        }
        if !skipped {
            sources.truncate(rules_per_iteration);
            let records = sources
                .iter()
                .map(|s| score_rule(s, suite, &options.score, score_seed, it))
                .collect::<Result<Vec<_>, _>>()?;
            archive.extend(records);
        }
        archive.iterations_done = it + 1;

        if let (Some(dir), Some(path)) = (&options.out_dir, &archive_path) {
            let transcripts = dir.join("transcripts");
            fs::create_dir_all(&transcripts)?;
            fs::write(transcripts.join(format!("{it}.txt")), transcript)?;
            archive.save(path)?;
        }
    }
    Ok(archive)
}
