//! Run logs and their JSON-lines form: one record per logged generation and
//! a closing summary record.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub generation: usize,
    pub fe: u64,
    pub population: usize,
    pub best_cv: f64,
    /// Best objective, present when the best individual is feasible.
    pub best_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub problem: String,
    pub data_source: Option<String>,
    pub seed: u64,
    pub initial_population: usize,
    pub max_fe: u64,
    pub fe_used: u64,
    pub generations: usize,
    pub final_population: usize,
    pub final_feasible: usize,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub best_cv: f64,
    pub feasible: bool,
    pub resampled: u64,
    pub events: Vec<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub entries: Vec<LogEntry>,
    pub summary: RunSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Generation(LogEntry),
    Summary(RunSummary),
}

impl RunLog {
    /// Best feasible objective of the run, if any.
    pub fn best_feasible_f(&self) -> Option<f64> {
        self.summary.feasible.then_some(self.summary.best_f)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(&Record::Generation(e.clone())).expect("log entries serialize"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Record::Summary(self.summary.clone())).expect("summary serializes"));
        out.push('\n');
        out
    }

    /// Parses a log; fails when the summary record is absent.
    pub fn from_jsonl(reader: impl BufRead) -> io::Result<RunLog> {
        let mut entries = Vec::new();
        let mut summary = None;
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Record>(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))? {
                Record::Generation(e) => entries.push(e),
                Record::Summary(s) => summary = Some(s),
            }
        }
        let summary = summary.ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "run log has no summary record"))?;
        Ok(RunLog { entries, summary })
    }

    pub fn read(path: &Path) -> io::Result<RunLog> {
        RunLog::from_jsonl(io::BufReader::new(fs::File::open(path)?))
    }

    /// Writes through a temporary file so a crash never leaves a log that
    /// looks complete.
    pub fn write(&self, path: &Path) -> io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("jsonl.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_jsonl().as_bytes())?;
        }
        fs::rename(tmp, path)
    }

    /// Copy with the wall-clock field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunLog {
        let mut log = self.clone();
        log.summary.wall_seconds = 0.0;
        log
    }
}
