use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::stats::{significance_mark, Mark, StatsSummary};
use super::timing::{timing_report, TimingReport};
use super::{resolve_algorithm, summarize, BenchError, CampaignConfig, CampaignResults};

/// Files written by [`emit_reports`].
pub const REPORT_FILES: [&str; 6] = [
    "table_minv.csv",
    "table_minv.md",
    "plusminus.csv",
    "summaries.csv",
    "timing.csv",
    "timing_plot.csv",
];

type Cell = (String, String);

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub algorithms: Vec<String>,
    pub problems: Vec<String>,
    pub reference: Option<String>,
    pub summaries: BTreeMap<Cell, StatsSummary>,
    /// Marks of non-reference algorithms; absent where undefined.
    pub marks: BTreeMap<Cell, Mark>,
    pub timing: TimingReport,
    /// Protocol details printed under the markdown table.
    pub notes: Vec<String>,
}

impl Report {
    /// (+, -, =) counts for a column.
    pub fn tally(&self, algorithm: &str) -> (usize, usize, usize) {
        let mut t = (0, 0, 0);
        for ((a, _), m) in &self.marks {
            if a == algorithm {
                match m {
                    Mark::Better => t.0 += 1,
                    Mark::Worse => t.1 += 1,
                    Mark::Equal => t.2 += 1,
                }
            }
        }
        t
    }
}

pub fn build_report(config: &CampaignConfig, results: &CampaignResults, t1: &BTreeMap<String, f64>) -> Report {
    let reference = config
        .reference
        .as_deref()
        .and_then(|r| resolve_algorithm(r, config.dim, config.population).ok().map(|a| a.label))
        .or_else(|| results.algorithms.first().cloned());
    let mut summaries = BTreeMap::new();
    let mut marks = BTreeMap::new();
    for p in &results.problems {
        for a in &results.algorithms {
            if let Some(s) = summarize(results, a, p) {
                summaries.insert((a.clone(), p.clone()), s);
            }
        }
        let Some(r) = &reference else { continue };
        let feasible = |a: &str| results.bests(a, p).into_iter().flatten().collect::<Vec<f64>>();
        let ref_bests = feasible(r);
        for a in results.algorithms.iter().filter(|a| *a != r) {
            if let Some(m) = significance_mark(&ref_bests, &feasible(a), config.alpha) {
                marks.insert((a.clone(), p.clone()), m);
            }
        }
    }

    let mut notes = vec![format!(
        "D = {}, {} runs per cell (seeds {}..{}), MaxFE = {}",
        config.dim,
        config.runs,
        config.base_seed,
        config.base_seed + config.runs as u64 - 1,
        config.max_fe()
    )];
    let populations: Vec<String> = config
        .algorithms
        .iter()
        .filter_map(|t| resolve_algorithm(t, config.dim, config.population).ok())
        .map(|a| format!("{} {}", a.label, a.population))
        .collect();
    notes.push(format!("initial population: {}", populations.join(", ")));
    let sources: BTreeSet<String> = results
        .cells
        .values()
        .flatten()
        .filter_map(|s| s.data_source.clone())
        .collect();
    if !sources.is_empty() {
        notes.push(format!(
            "benchmark data: {}",
            sources.into_iter().collect::<Vec<_>>().join(", ")
        ));
    }
    if let Some(r) = &reference {
        notes.push(format!(
            "marks: two-sided Wilcoxon rank-sum at alpha = {} against {r}; + better, - worse, = no significant difference",
            config.alpha
        ));
    }
    if !results.missing.is_empty() {
        notes.push(format!("{} runs missing", results.missing.len()));
    }

    Report {
        algorithms: results.algorithms.clone(),
        problems: results.problems.clone(),
        reference,
        summaries,
        marks,
        timing: timing_report(&results.walls(), t1),
        notes,
    }
}

/// Scientific notation with an explicitly signed exponent, e.g. `-4.7769e-1`.
fn sci(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return "NaN".into();
    }
    let s = format!("{v:.digits$e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

/// `v_avg(v_std)` followed by the mark, or `NaN(NaN)` without feasible runs.
pub fn format_cell(summary: Option<&StatsSummary>, mark: Option<Mark>) -> String {
    let mut s = match summary {
        Some(s) if !s.is_nan => format!(
            "{}({})",
            sci(s.v_avg.unwrap_or(f64::NAN), 4),
            sci(s.v_std.unwrap_or(f64::NAN), 2)
        ),
        _ => "NaN(NaN)".to_string(),
    };
    if let Some(m) = mark {
        s.push(' ');
        s.push_str(m.symbol());
    }
    s
}

fn exact(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:e}"))
}

fn parse_opt(field: &str) -> Option<f64> {
    if field.is_empty() {
        None
    } else {
        field.parse().ok()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, BenchError> {
    csv::Writer::from_path(path).map_err(|source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, rows: &[Vec<String>]) -> Result<(), BenchError> {
    let mut w = csv_writer(path)?;
    let err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

impl Report {
    fn cell(&self, a: &str, p: &str) -> String {
        let key = (a.to_string(), p.to_string());
        format_cell(self.summaries.get(&key), self.marks.get(&key).copied())
    }

    fn tally_text(&self, a: &str) -> String {
        if Some(a) == self.reference.as_deref() {
            return String::new();
        }
        let (p, m, e) = self.tally(a);
        format!("{p}/{m}/{e}")
    }

    fn markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| Problem | {} |", self.algorithms.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(self.algorithms.len()));
        for p in &self.problems {
            let cells: Vec<String> = self.algorithms.iter().map(|a| self.cell(a, p)).collect();
            let _ = writeln!(s, "| {p} | {} |", cells.join(" | "));
        }
        let tallies: Vec<String> = self.algorithms.iter().map(|a| self.tally_text(a)).collect();
        let _ = writeln!(s, "| +/-/= | {} |", tallies.join(" | "));
        s.push('\n');
        for n in &self.notes {
            let _ = writeln!(s, "- {n}");
        }
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Writes every file in [`REPORT_FILES`] into `out_dir`.
pub fn emit_reports(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let path = |name: &str| out_dir.join(name);

    let mut header = vec!["problem".to_string()];
    header.extend(report.algorithms.iter().cloned());
    let mut table = vec![header];
    for p in &report.problems {
        let mut row = vec![p.clone()];
        row.extend(report.algorithms.iter().map(|a| report.cell(a, p)));
        table.push(row);
    }
    write_rows(&path("table_minv.csv"), &table)?;

    let md = path("table_minv.md");
    fs::write(&md, report.markdown()).map_err(|e| BenchError::io(&md, e))?;

    let mut header = vec!["row".to_string()];
    header.extend(report.algorithms.iter().cloned());
    let mut tallies = vec!["+/-/=".to_string()];
    tallies.extend(report.algorithms.iter().map(|a| report.tally_text(a)));
    write_rows(&path("plusminus.csv"), &[header, tallies])?;

    let mut rows = vec![[
        "algorithm",
        "problem",
        "runs",
        "feasible_runs",
        "feasibility_rate",
        "v_avg",
        "v_std",
        "best",
        "median",
        "worst",
        "is_nan",
    ]
    .map(String::from)
    .to_vec()];
    for ((a, p), s) in &report.summaries {
        rows.push(vec![
            a.clone(),
            p.clone(),
            s.runs.to_string(),
            s.feasible_runs.to_string(),
            exact(Some(s.feasibility_rate)),
            exact(s.v_avg),
            exact(s.v_std),
            exact(s.best),
            exact(s.median),
            exact(s.worst),
            s.is_nan.to_string(),
        ]);
    }
    write_rows(&path("summaries.csv"), &rows)?;

    let mut rows = vec![[
        "algorithm",
        "problem",
        "t1_seconds",
        "t2_seconds",
        "normalized",
        "relative_to_de",
    ]
    .map(String::from)
    .to_vec()];
    let mut plot = vec![["problem", "algorithm", "normalized"].map(String::from).to_vec()];
    for r in &report.timing.rows {
        rows.push(vec![
            r.algorithm.clone(),
            r.problem.clone(),
            fmt_opt(r.t1),
            r.t2.to_string(),
            r.normalized.to_string(),
            fmt_opt(r.relative_to_de),
        ]);
        plot.push(vec![r.problem.clone(), r.algorithm.clone(), r.normalized.to_string()]);
    }
    write_rows(&path("timing.csv"), &rows)?;
    write_rows(&path("timing_plot.csv"), &plot)?;

    Ok(REPORT_FILES.iter().map(|f| path(f)).collect())
}

/// Reads `summaries.csv` back.
pub fn read_summaries(path: &Path) -> Result<BTreeMap<Cell, StatsSummary>, BenchError> {
    let err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |msg: &str| BenchError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(err)?;
    let mut out = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(err)?;
        if rec.len() != 11 {
            return Err(bad("expected 11 columns"));
        }
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad("bad integer"));
        out.insert(
            (rec[0].to_string(), rec[1].to_string()),
            StatsSummary {
                runs: int(2)?,
                feasible_runs: int(3)?,
                feasibility_rate: parse_opt(&rec[4]).ok_or_else(|| bad("bad feasibility rate"))?,
                v_avg: parse_opt(&rec[5]),
                v_std: parse_opt(&rec[6]),
                best: parse_opt(&rec[7]),
                median: parse_opt(&rec[8]),
                worst: parse_opt(&rec[9]),
                is_nan: &rec[10] == "true",
            },
        );
    }
    Ok(out)
}
