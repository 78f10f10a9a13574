//! The outer loop: an LLM proposes update rules, each rule is scored by
//! running the engine on training problems, and the archive of results is
//! fed back into the next prompt.

mod extract;
mod prompt;
mod score;
mod train;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::RunError;
use crate::ruledsl::{parse, RuleAst, RuleOrigin};

pub use extract::{extract_rules, Extraction};
pub use prompt::{build_prompt, build_prompt_with, summarize_problem, ProblemSummary, PromptOptions, PromptSections, NO_HISTORY};
pub use score::{score_rule, ScoreSettings};
pub use train::{meta_train, training_suite, MetaOptions};

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("meta configuration: {0}")]
    Config(String),
    #[error("no successfully scored rule in the archive; fall back to the builtin de_rand_1_bin")]
    NoScoredRules,
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("archive I/O: {0}")]
    Io(#[from] io::Error),
    #[error("archive format: {0}")]
    Json(#[from] serde_json::Error),
}

/// How one rule did on one problem over its replicate runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemScore {
    pub feasibility_rate: f64,
    /// Mean best objective over feasible runs; absent when none was feasible.
    pub mean_best_f: Option<f64>,
    pub mean_final_cv: f64,
}

impl ProblemScore {
    /// Better scores order first: higher feasibility rate, then lower mean
    /// objective, then lower violation.
    pub fn compare(&self, other: &ProblemScore) -> Ordering {
        other
            .feasibility_rate
            .total_cmp(&self.feasibility_rate)
            .then_with(|| match (self.mean_best_f, other.mean_best_f) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            })
            .then_with(|| self.mean_final_cv.total_cmp(&other.mean_final_cv))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    /// Canonical text for parsed rules, the raw source for failures.
    pub text: String,
    pub origin: RuleOrigin,
    pub per_problem: BTreeMap<String, ProblemScore>,
    /// Rank-normalized score in (0, 1]; higher is better. Absent for
    /// rules that failed to parse, which rank below everything.
    pub aggregate: Option<f64>,
    pub meta_iteration: usize,
    pub parse_failure: Option<String>,
}

impl RuleRecord {
    pub fn failed(&self) -> bool {
        self.parse_failure.is_some()
    }

    pub fn rule(&self) -> Option<RuleAst> {
        if self.failed() {
            None
        } else {
            parse(&self.text).ok()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEvent {
    pub iteration: usize,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaArchive {
    /// Elite capacity.
    pub k: usize,
    pub history: Vec<RuleRecord>,
    pub elites: Vec<RuleRecord>,
    pub events: Vec<MetaEvent>,
    /// Iterations finished (including skipped ones); resume point.
    pub iterations_done: usize,
}

impl Default for MetaArchive {
    fn default() -> Self {
        MetaArchive::new(3)
    }
}

/// Orders records best first: aggregate descending, then earliest
/// iteration, then earliest position.
fn elite_order(a: &(usize, &RuleRecord), b: &(usize, &RuleRecord)) -> Ordering {
    let agg = |r: &RuleRecord| r.aggregate.unwrap_or(f64::NEG_INFINITY);
    agg(b.1)
        .total_cmp(&agg(a.1))
        .then(a.1.meta_iteration.cmp(&b.1.meta_iteration))
        .then(a.0.cmp(&b.0))
}

impl MetaArchive {
    pub fn new(k: usize) -> Self {
        MetaArchive {
            k,
            history: Vec::new(),
            elites: Vec::new(),
            events: Vec::new(),
            iterations_done: 0,
        }
    }

    pub fn push(&mut self, record: RuleRecord) {
        self.history.push(record);
        self.refresh();
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = RuleRecord>) {
        self.history.extend(records);
        self.refresh();
    }

    pub fn log(&mut self, iteration: usize, kind: &str, message: impl Into<String>) {
        self.events.push(MetaEvent {
            iteration,
            kind: kind.to_string(),
            message: message.into(),
        });
    }

    /// Recomputes every aggregate against the whole history and rebuilds
    /// the elite list. Each problem ranks the records scored on it:
    /// rank = 1 + number of strictly better records, normalized to
    /// (n - rank + 1) / n.
    pub fn refresh(&mut self) {
        let mut by_problem: BTreeMap<&str, Vec<&ProblemScore>> = BTreeMap::new();
        for r in self.history.iter().filter(|r| !r.failed()) {
            for (id, s) in &r.per_problem {
                by_problem.entry(id.as_str()).or_default().push(s);
            }
        }
        let aggregates: Vec<Option<f64>> = self
            .history
            .iter()
            .map(|r| {
                if r.failed() {
                    return None;
                }
                if r.per_problem.is_empty() {
                    return Some(1.0);
                }
                let total: f64 = r
                    .per_problem
                    .iter()
                    .map(|(id, s)| {
                        let peers = &by_problem[id.as_str()];
                        let better = peers.iter().filter(|p| p.compare(s) == Ordering::Less).count();
                        let n = peers.len() as f64;
                        (n - better as f64) / n
                    })
                    .sum();
                Some(total / r.per_problem.len() as f64)
            })
            .collect();
        for (r, a) in self.history.iter_mut().zip(aggregates) {
            r.aggregate = a;
        }

        let mut ranked: Vec<(usize, &RuleRecord)> = self.history.iter().enumerate().filter(|(_, r)| !r.failed()).collect();
        ranked.sort_by(elite_order);
        let mut elites: Vec<RuleRecord> = Vec::with_capacity(self.k);
        for (_, r) in ranked {
            if elites.len() == self.k {
                break;
            }
            if !elites.iter().any(|e| e.text == r.text) {
                elites.push(r.clone());
            }
        }
        self.elites = elites;
    }

    /// The `n` most recent records, newest last.
    pub fn recent(&self, n: usize) -> &[RuleRecord] {
        &self.history[self.history.len().saturating_sub(n)..]
    }

    pub fn load(path: &Path) -> Result<MetaArchive, MetaError> {
        let mut archive: MetaArchive = serde_json::from_str(&fs::read_to_string(path)?)?;
        archive.refresh();
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> Result<(), MetaError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}

/// The best scored rule; ties go to the earliest meta-iteration.
pub fn select_deployment_rule(archive: &MetaArchive) -> Result<RuleAst, MetaError> {
    let mut ranked: Vec<(usize, &RuleRecord)> = archive.history.iter().enumerate().filter(|(_, r)| !r.failed()).collect();
    ranked.sort_by(elite_order);
    ranked
        .into_iter()
        .find_map(|(_, r)| r.rule())
        .ok_or(MetaError::NoScoredRules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str, iteration: usize, scores: &[(&str, f64, Option<f64>, f64)]) -> RuleRecord {
        RuleRecord {
            text: text.to_string(),
            origin: RuleOrigin::Scripted,
            per_problem: scores
                .iter()
                .map(|(id, fr, f, cv)| {
                    (
                        id.to_string(),
                        ProblemScore {
                            feasibility_rate: *fr,
                            mean_best_f: *f,
                            mean_final_cv: *cv,
                        },
                    )
                })
                .collect(),
            aggregate: None,
            meta_iteration: iteration,
            parse_failure: None,
        }
    }

    fn failed(iteration: usize) -> RuleRecord {
        RuleRecord {
            text: "offspring = 1;".into(),
            origin: RuleOrigin::Scripted,
            per_problem: BTreeMap::new(),
            aggregate: None,
            meta_iteration: iteration,
            parse_failure: Some("type error".into()),
        }
    }

    const A: &str = "offspring = x;\n";
    const B: &str = "offspring = best;\n";
    const C: &str = "offspring = mean;\n";
    const D: &str = "offspring = r1;\n";

    #[test]
    fn score_order() {
        let s = |fr, f, cv| ProblemScore {
            feasibility_rate: fr,
            mean_best_f: f,
            mean_final_cv: cv,
        };
        assert_eq!(s(1.0, Some(5.0), 0.0).compare(&s(0.5, Some(1.0), 0.0)), Ordering::Less);
        assert_eq!(s(0.5, Some(1.0), 9.0).compare(&s(0.5, Some(2.0), 0.0)), Ordering::Less);
        assert_eq!(s(0.0, None, 1.0).compare(&s(0.0, None, 2.0)), Ordering::Less);
        assert_eq!(s(0.5, Some(1.0), 1.0).compare(&s(0.5, Some(1.0), 1.0)), Ordering::Equal);
    }

    #[test]
    fn single_rule_gets_top_score() {
        let mut a = MetaArchive::new(3);
        a.push(record(A, 0, &[("p", 0.3, Some(1.0), 2.0), ("q", 0.0, None, 4.0)]));
        assert_eq!(a.history[0].aggregate, Some(1.0));
    }

    #[test]
    fn aggregates_and_elites() {
        let mut a = MetaArchive::new(2);
        a.push(record(A, 0, &[("p", 1.0, Some(3.0), 0.0), ("q", 1.0, Some(1.0), 0.0)]));
        a.push(failed(0));
        a.push(record(B, 1, &[("p", 1.0, Some(1.0), 0.0), ("q", 1.0, Some(1.0), 0.0)]));
        a.push(record(C, 1, &[("p", 0.0, None, 3.0), ("q", 0.0, None, 1.0)]));
        // p: B > A > C ; q: A = B > C
        let agg: Vec<Option<f64>> = a.history.iter().map(|r| r.aggregate).collect();
        assert_eq!(agg, vec![Some((2.0 / 3.0 + 1.0) / 2.0), None, Some(1.0), Some(1.0 / 3.0)]);
        let elite_texts: Vec<&str> = a.elites.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(elite_texts, vec![B, A]);
        for e in &a.elites {
            for r in a.history.iter().filter(|r| !a.elites.contains(r)) {
                assert!(e.aggregate >= r.aggregate.or(Some(f64::NEG_INFINITY)));
            }
        }
    }

    #[test]
    fn ranking_is_order_independent() {
        let recs = vec![
            record(A, 0, &[("p", 1.0, Some(3.0), 0.0)]),
            record(B, 0, &[("p", 0.5, Some(1.0), 0.0), ("q", 0.2, Some(7.0), 1.0)]),
            record(C, 1, &[("q", 0.2, Some(6.0), 1.0)]),
            record(D, 2, &[("p", 0.5, Some(1.0), 0.0)]),
        ];
        let mut fwd = MetaArchive::new(3);
        for r in recs.clone() {
            fwd.push(r);
        }
        let mut rev = MetaArchive::new(3);
        for r in recs.into_iter().rev() {
            rev.push(r);
        }
        for r in &fwd.history {
            let twin = rev.history.iter().find(|o| o.text == r.text).unwrap();
            assert_eq!(r.aggregate, twin.aggregate);
            let a = r.aggregate.unwrap();
            assert!(a > 0.0 && a <= 1.0);
        }
        assert_eq!(fwd.elites, rev.elites);
    }

    #[test]
    fn elites_skip_duplicate_texts() {
        let mut a = MetaArchive::new(3);
        a.push(record(A, 0, &[("p", 1.0, Some(1.0), 0.0)]));
        a.push(record(A, 1, &[("p", 1.0, Some(1.0), 0.0)]));
        a.push(record(B, 1, &[("p", 1.0, Some(2.0), 0.0)]));
        assert_eq!(a.elites.len(), 2);
        assert_eq!(a.elites[0].meta_iteration, 0);
    }

    #[test]
    fn deployment_tie_goes_to_earlier_iteration() {
        let mut a = MetaArchive::new(3);
        a.push(record(B, 7, &[("p", 1.0, Some(1.0), 0.0)]));
        a.push(record(A, 3, &[("p", 1.0, Some(1.0), 0.0)]));
        assert_eq!(select_deployment_rule(&a).unwrap(), parse(A).unwrap());

        let mut single = MetaArchive::new(3);
        single.push(record(C, 0, &[]));
        assert_eq!(select_deployment_rule(&single).unwrap(), parse(C).unwrap());

        let mut bad = MetaArchive::new(3);
        bad.push(failed(0));
        assert!(matches!(select_deployment_rule(&bad), Err(MetaError::NoScoredRules)));
        assert!(matches!(select_deployment_rule(&MetaArchive::new(3)), Err(MetaError::NoScoredRules)));
    }

    #[test]
    fn archive_round_trips_through_json() {
        let mut a = MetaArchive::new(3);
        a.push(record(A, 0, &[("p", 0.5, Some(0.1 + 0.2), 1e-9)]));
        a.push(failed(1));
        a.log(1, "extraction-failure", "no rule block");
        a.iterations_done = 2;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("archive.json");
        a.save(&path).unwrap();
        assert_eq!(MetaArchive::load(&path).unwrap(), a);
    }
}
