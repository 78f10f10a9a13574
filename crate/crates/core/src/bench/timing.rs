use std::collections::BTreeMap;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::problems::Problem;
use crate::rng::RunRng;

/// Evaluations timed by [`measure_t1`].
pub const T1_EVALUATIONS: usize = 10_000;

/// Seconds spent on [`T1_EVALUATIONS`] evaluations of uniform points, with
/// point generation kept outside the timed section.
pub fn measure_t1(problem: &dyn Problem, seed: u64) -> f64 {
    let spec = problem.spec();
    let mut rng = RunRng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..T1_EVALUATIONS).map(|_| spec.sample_uniform(&mut rng)).collect();
    let start = Instant::now();
    for x in &points {
        black_box(problem.evaluate_unchecked(black_box(x)));
    }
    start.elapsed().as_secs_f64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub algorithm: String,
    pub problem: String,
    pub t1: Option<f64>,
    /// Mean wall time of one full run.
    pub t2: f64,
    /// `t2` over the fastest algorithm's `t2` on the same problem.
    pub normalized: f64,
    /// `t2` over plain DE's on the same problem, when DE was run.
    pub relative_to_de: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
}

/// Divides each wall time by the smallest one.
pub fn normalize(walls: &[f64]) -> Vec<f64> {
    let min = walls.iter().cloned().fold(f64::INFINITY, f64::min);
    walls
        .iter()
        .map(|w| if *w == min || min <= 0.0 { 1.0 } else { w / min })
        .collect()
}

/// Builds the report from mean wall times keyed by (algorithm, problem).
/// Cells without a wall time are simply absent.
pub fn timing_report(walls: &BTreeMap<(String, String), f64>, t1: &BTreeMap<String, f64>) -> TimingReport {
    let mut by_problem: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for ((algo, problem), w) in walls {
        by_problem.entry(problem).or_default().push((algo, *w));
    }
    let mut rows = Vec::new();
    for (problem, cells) in by_problem {
        let values: Vec<f64> = cells.iter().map(|c| c.1).collect();
        let de = cells.iter().find(|c| c.0 == "de").map(|c| c.1);
        for ((algo, wall), normalized) in cells.iter().zip(normalize(&values)) {
            rows.push(TimingRow {
                algorithm: algo.to_string(),
                problem: problem.to_string(),
                t1: t1.get(problem).copied(),
                t2: *wall,
                normalized,
                relative_to_de: de.filter(|d| *d > 0.0).map(|d| wall / d),
            });
        }
    }
    TimingReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize(&[2.0, 4.0, 3.0]), vec![1.0, 2.0, 1.5]);
        assert_eq!(normalize(&[0.7]), vec![1.0]);
    }

    #[test]
    fn report_rows() {
        let mut walls = BTreeMap::new();
        walls.insert(("de".to_string(), "C01".to_string()), 2.0);
        walls.insert(("ga".to_string(), "C01".to_string()), 3.0);
        walls.insert(("ga".to_string(), "C02".to_string()), 5.0);
        let r = timing_report(&walls, &BTreeMap::from([("C01".to_string(), 0.01)]));
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.rows[1].normalized, 1.5);
        assert_eq!(r.rows[1].relative_to_de, Some(1.5));
        assert_eq!(r.rows[2].normalized, 1.0);
        assert_eq!(r.rows[2].relative_to_de, None);
        assert_eq!(r.rows[2].t1, None);
    }
}
