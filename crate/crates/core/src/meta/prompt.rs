use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{MetaArchive, RuleRecord};
use crate::constraint::Individual;
use crate::problems::{estimate_feasibility_ratio, Problem};
use crate::rng::{mix, RunRng};

/// History text used before any rule has been scored.
pub const NO_HISTORY: &str = "No prior rules evaluated.";

const MIN_RULE_CHARS: usize = 40;

/// What the prompt says about the sampled training problem. Only summary
/// statistics of the initial population are included, never raw vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub id: String,
    pub dim: usize,
    pub n_ineq: usize,
    pub n_constraints: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub feasibility_ratio: f64,
    pub population: usize,
    /// min, median, max of the initial population's objective.
    pub f_stats: [f64; 3],
    /// min, median, max of the initial population's violation.
    pub cv_stats: [f64; 3],
}

fn min_median_max(mut v: Vec<f64>) -> [f64; 3] {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    [v[0], median, v[n - 1]]
}

/// Evaluates a uniform initial population of size `population` (not billed
/// to any run) and estimates the feasibility ratio from `samples` points.
pub fn summarize_problem(problem: &dyn Problem, population: usize, samples: usize, seed: u64) -> ProblemSummary {
    let spec = problem.spec();
    let mut rng = RunRng::seed_from_u64(seed);
    let members: Vec<Individual> = (0..population.max(1))
        .map(|_| {
            let x = spec.sample_uniform(&mut rng);
            let e = problem.evaluate_unchecked(&x);
            Individual::from_values(x, e.f, e.g, e.h, spec.eps)
        })
        .collect();
    ProblemSummary {
        id: spec.id.clone(),
        dim: spec.dim,
        n_ineq: spec.n_ineq,
        n_constraints: spec.n_constraints,
        lower: spec.lower.clone(),
        upper: spec.upper.clone(),
        feasibility_ratio: estimate_feasibility_ratio(problem, samples, mix(seed, 1)),
        population: members.len(),
        f_stats: min_median_max(members.iter().map(|m| m.f).collect()),
        cv_stats: min_median_max(members.iter().map(|m| m.cv).collect()),
    }
}

impl ProblemSummary {
    fn bounds_text(&self) -> String {
        let uniform = |v: &[f64]| v.iter().all(|b| *b == v[0]);
        if !self.lower.is_empty() && uniform(&self.lower) && uniform(&self.upper) {
            format!("[{}, {}] in every coordinate", self.lower[0], self.upper[0])
        } else {
            let lo = self.lower.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = self.upper.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            format!("per-coordinate boxes within [{lo}, {hi}]")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSections {
    pub role: String,
    pub task: String,
    pub operating: String,
    pub history: String,
    pub output_format: String,
}

impl PromptSections {
    pub fn system_message(&self) -> String {
        self.role.clone()
    }

    pub fn user_message(&self) -> String {
        [&self.task, &self.operating, &self.history, &self.output_format]
            .map(|s| s.as_str())
            .join("\n\n")
    }

    pub fn full_text(&self) -> String {
        format!("{}\n\n{}", self.system_message(), self.user_message())
    }

    pub fn len_chars(&self) -> usize {
        self.full_text().chars().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptOptions {
    pub char_cap: usize,
    /// Most recent records shown in addition to the elites.
    pub recent: usize,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions {
            char_cap: 24_000,
            recent: 5,
        }
    }
}

const ROLE: &str = "You are an expert in evolutionary computation. You design update rules for a \
population-based optimizer that solves constrained continuous minimization problems. In this \
episode you propose one new rule that maps a parent individual and read-only views of its \
population to one offspring vector.";

const OPERATING: &str = "## Operating requirements
1. Study the problem summary: dimension, constraint counts, bounds, how rare feasible points are, \
and how the initial population scores.
2. Study the history: which rules scored well, which failed, and why.
3. Propose one rule that is likely to score better. You may reuse and recombine ideas from the \
elite rules, change their parameters, or invent a new operator.
4. If a previous rule failed to parse or type-check, do not repeat its mistake.
5. Keep the rule short and deterministic apart from rand() and randn().

Selection is fixed: parents and offspring are pooled and the best N survive under the \
feasibility rule (lower constraint violation first, then lower objective). Every offspring costs \
one function evaluation. Rules are scored by their rank against all earlier rules on each \
training problem: feasibility rate first, then mean best objective, then mean final violation.";

const OUTPUT_FORMAT: &str = "## Output format
Reply with exactly one fenced block tagged `rule`, for example:

```rule
F = 0.5;
CR = 0.9;
v = r1 + F * (r2 - r3);
offspring = bincross(x, clamp(v), CR);
```

Grammar recap:
- Optional leading parameters: `NAME = NUMBER;`
- Then statements `name = expression;`. The last one must assign a vector to `offspring`.
- Vectors: x (parent), best, r1, r2, r3 (three distinct random members other than x), mean \
(population centroid), lb, ub (bounds).
- Scalars: cv (parent violation), f (parent objective), dim, numbers, parameters.
- Operators: + - * / and unary minus; scalars broadcast over vectors.
- Functions: rand() uniform [0,1) scalar, randn() standard normal scalar, bincross(a, b, cr) \
binomial crossover taking b's component with probability cr and at least once, clamp(v) to bounds, \
abs(a), min(a, b), max(a, b).
- Components that end up non-finite are redrawn uniformly; out-of-bounds offspring are clamped.";

fn task_section(summary: &ProblemSummary, iteration: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "## Task (meta-iteration {iteration})");
    let _ = writeln!(
        s,
        "Training problem {}: minimize f(x) over x in R^{} subject to {} inequality constraints g(x) <= 0 \
and {} equality constraints |h(x)| <= 1e-4.",
        summary.id,
        summary.dim,
        summary.n_ineq,
        summary.n_constraints - summary.n_ineq
    );
    let _ = writeln!(s, "Bounds: {}.", summary.bounds_text());
    let _ = writeln!(
        s,
        "Estimated feasibility ratio (uniform sampling): {:.4e}.",
        summary.feasibility_ratio
    );
    let [a, b, c] = summary.f_stats;
    let _ = writeln!(
        s,
        "Initial population of {}: objective min {a:.6e}, median {b:.6e}, max {c:.6e}.",
        summary.population
    );
    let [a, b, c] = summary.cv_stats;
    let _ = write!(s, "Constraint violation min {a:.6e}, median {b:.6e}, max {c:.6e}.");
    s
}

fn clip(text: &str, max: usize) -> String {
    if text.chars().count() <= max {
        text.to_string()
    } else {
        let head: String = text.chars().take(max).collect();
        format!("{head}... [truncated]")
    }
}

fn render_record(label: &str, r: &RuleRecord, max_rule: usize) -> String {
    let mut s = String::new();
    match &r.parse_failure {
        Some(err) => {
            let _ = writeln!(s, "[{label}] iteration {}: REJECTED: {err}", r.meta_iteration);
        }
        None => {
            let _ = writeln!(
                s,
                "[{label}] iteration {}: aggregate score {:.4} (1 is best)",
                r.meta_iteration,
                r.aggregate.unwrap_or(0.0)
            );
            for (id, p) in &r.per_problem {
                let f = p.mean_best_f.map_or("n/a".to_string(), |f| format!("{f:.6e}"));
                let _ = writeln!(
                    s,
                    "  {id}: feasible runs {:.0}%, mean best f {f}, mean final cv {:.6e}",
                    100.0 * p.feasibility_rate,
                    p.mean_final_cv
                );
            }
        }
    }
    for line in clip(&r.text, max_rule).lines() {
        let _ = writeln!(s, "    {line}");
    }
    s
}

fn history_section(entries: &[(String, &RuleRecord)], total: usize, failed: usize, max_rule: usize) -> String {
    let mut s = format!("## History ({total} rules evaluated so far, {failed} rejected)\n");
    for (label, r) in entries {
        s.push_str(&render_record(label, r, max_rule));
    }
    s.trim_end().to_string()
}

pub fn build_prompt(archive: &MetaArchive, summary: &ProblemSummary, iteration: usize) -> PromptSections {
    build_prompt_with(archive, summary, iteration, &PromptOptions::default())
}

/// Builds the five prompt sections. The history lists the elites and the
/// most recent records; when the text exceeds the cap, older recent records
/// go first, then rule texts are shortened, then the history is cut.
pub fn build_prompt_with(
    archive: &MetaArchive,
    summary: &ProblemSummary,
    iteration: usize,
    options: &PromptOptions,
) -> PromptSections {
    let mut sections = PromptSections {
        role: ROLE.to_string(),
        task: task_section(summary, iteration),
        operating: OPERATING.to_string(),
        history: NO_HISTORY.to_string(),
        output_format: OUTPUT_FORMAT.to_string(),
    };
    if archive.history.is_empty() {
        return sections;
    }

    let entries: Vec<(String, &RuleRecord)> = archive
        .elites
        .iter()
        .enumerate()
        .map(|(i, r)| (format!("elite {}", i + 1), r))
        .collect();
    let mut recent: Vec<(String, &RuleRecord)> = archive
        .recent(options.recent)
        .iter()
        .map(|r| ("recent".to_string(), r))
        .collect();
    let total = archive.history.len();
    let failed = archive.history.iter().filter(|r| r.failed()).count();
    let fixed = {
        sections.history.clear();
        sections.len_chars()
    };
    let fits = |history: &str| fixed + history.chars().count() <= options.char_cap;

    let mut max_rule = usize::MAX;
    loop {
        let all: Vec<(String, &RuleRecord)> = entries.iter().cloned().chain(recent.iter().cloned()).collect();
        let text = history_section(&all, total, failed, max_rule);
        if fits(&text) {
            sections.history = text;
            return sections;
        }
        if recent.len() > 1 {
            recent.remove(0);
        } else if max_rule > MIN_RULE_CHARS {
            let longest = all.iter().map(|(_, r)| r.text.chars().count()).max().unwrap_or(0);
            max_rule = (max_rule.min(longest) / 2).max(MIN_RULE_CHARS);
        } else {
            let room = options.char_cap.saturating_sub(fixed);
            let marker = "\n[history truncated]";
            let keep = room.saturating_sub(marker.len());
            sections.history = text.chars().take(keep).collect::<String>() + marker;
            return sections;
        }
    }
}
