//! Constraint-violation aggregation and the feasibility-rule ordering used by
//! environmental selection.
//!
//! An [`Individual`] carries its objective value `f` and an aggregate
//! violation `cv`. Individuals are ordered lexicographically on `(cv, f)`:
//! any feasible point beats any infeasible point, lower violation wins among
//! infeasible points, and the objective decides among feasible points.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default equality tolerance of the CEC2010 constrained protocol.
pub const DEFAULT_EQUALITY_TOLERANCE: f64 = 1e-4;

/// Violation recorded for candidates whose evaluation produced non-finite
/// values. Loses every comparison against a finitely evaluated candidate.
pub const CV_SENTINEL: f64 = f64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("non-finite {kind} value at index {index}")]
    NonFinite { kind: &'static str, index: usize },
    #[error("equality tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// Aggregate constraint violation:
/// `sum(max(0, g_i)) + sum(max(0, |h_j| - eps))`.
pub fn compute_cv(g: &[f64], h: &[f64], eps: f64) -> Result<f64, EvaluationError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(EvaluationError::BadTolerance(eps));
    }
    let mut cv = 0.0;
    for (index, &gi) in g.iter().enumerate() {
        if !gi.is_finite() {
            return Err(EvaluationError::NonFinite { kind: "inequality", index });
        }
        cv += gi.max(0.0);
    }
    for (index, &hj) in h.iter().enumerate() {
        if !hj.is_finite() {
            return Err(EvaluationError::NonFinite { kind: "equality", index });
        }
        cv += (hj.abs() - eps).max(0.0);
    }
    Ok(cv)
}

/// An evaluated candidate solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub cv: f64,
    pub feasible: bool,
}

impl Individual {
    /// Builds an individual from raw objective and constraint values.
    ///
    /// Non-finite objective or constraint values collapse to the sentinel
    /// `(cv, f) = (CV_SENTINEL, f64::MAX)` so NaN never reaches statistics.
    pub fn from_values(x: Vec<f64>, f: f64, g: Vec<f64>, h: Vec<f64>, eps: f64) -> Self {
        match compute_cv(&g, &h, eps) {
            Ok(cv) if f.is_finite() && cv.is_finite() => Individual {
                x,
                f,
                g,
                h,
                cv,
                feasible: cv == 0.0,
            },
            _ => Individual {
                x,
                f: if f.is_finite() { f } else { f64::MAX },
                g,
                h,
                cv: CV_SENTINEL,
                feasible: false,
            },
        }
    }

    /// Individual with only `(cv, f)` set; used by selection tests and
    /// callers that track summaries rather than raw constraint values.
    pub fn with_scores(x: Vec<f64>, cv: f64, f: f64) -> Self {
        Individual {
            x,
            f,
            g: Vec::new(),
            h: Vec::new(),
            cv,
            feasible: cv == 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Lexicographic `(cv, f)` order. `Less` means `a` precedes (is better than) `b`.
pub fn feasibility_order(a: &Individual, b: &Individual) -> Ordering {
    a.cv.total_cmp(&b.cv).then(a.f.total_cmp(&b.f))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("selection size must be positive")]
    ZeroSize,
    #[error("union has {actual} members, expected {expected}")]
    UnionSize { expected: usize, actual: usize },
}

/// Selects the `n` best members of a `2n` union under [`feasibility_order`].
///
/// Output is sorted best first. Exact `(cv, f)` ties keep input order.
pub fn environmental_selection(
    union: Vec<Individual>,
    n: usize,
) -> Result<Vec<Individual>, SelectionError> {
    if n == 0 {
        return Err(SelectionError::ZeroSize);
    }
    if union.len() != 2 * n {
        return Err(SelectionError::UnionSize {
            expected: 2 * n,
            actual: union.len(),
        });
    }
    Ok(select_best(union, n))
}

/// Same ordering as [`environmental_selection`] without the `2n` size
/// contract; keeps `min(n, len)` members.
pub fn select_best(mut union: Vec<Individual>, n: usize) -> Vec<Individual> {
    // slice::sort_by is stable
    union.sort_by(feasibility_order);
    union.truncate(n);
    union
}

/// Index of the best member, earliest index on ties.
pub fn best_index(members: &[Individual]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, ind) in members.iter().enumerate() {
        match best {
            Some(b) if feasibility_order(ind, &members[b]) != Ordering::Less => {}
            _ => best = Some(i),
        }
    }
    best
}

/// A population of evaluated individuals at a given generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Self {
        Population {
            members,
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Individual> {
        best_index(&self.members).map(|i| &self.members[i])
    }

    /// Componentwise centroid of the decision vectors.
    pub fn centroid(&self) -> Vec<f64> {
        let Some(first) = self.members.first() else {
            return Vec::new();
        };
        let mut mean = vec![0.0; first.dim()];
        for ind in &self.members {
            for (m, v) in mean.iter_mut().zip(&ind.x) {
                *m += v;
            }
        }
        let n = self.members.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn feasible_count(&self) -> usize {
        self.members.iter().filter(|m| m.feasible).count()
    }
}

/// Function-evaluation budget of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalBudget {
    pub used: u64,
    pub max: u64,
}

impl EvalBudget {
    pub fn new(max: u64) -> Self {
        EvalBudget { used: 0, max }
    }

    pub fn charge(&mut self, n: u64) {
        self.used += n;
    }

    /// Whether `n` more evaluations fit without exceeding `max`.
    pub fn fits(&self, n: u64) -> bool {
        self.used + n <= self.max
    }

    pub fn remaining(&self) -> u64 {
        self.max.saturating_sub(self.used)
    }
}
