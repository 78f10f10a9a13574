//! Constrained problems: the evaluation interface, the CEC2010 constrained
//! suite, benchmark data loading and a generator of synthetic training COPs.

pub mod cec2010;
pub mod data;
pub mod oracle;
pub mod synthetic;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::{EvalBudget, Individual, DEFAULT_EQUALITY_TOLERANCE};
use crate::rng::RunRng;

pub use cec2010::{Cec2010Function, Cec2010Problem};
pub use data::{load_problem_data, DataSource, LoadError, ProblemData};
pub use synthetic::{synthesize_training_cop, SyntheticCop, SyntheticObjective};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension mismatch: problem {id} has D={expected}, got {actual}")]
    Dimension {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("x[{index}]={value} lies outside [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),
    #[error("unsupported dimension {dim} for {id}")]
    UnsupportedDimension { id: String, dim: usize },
    #[error(transparent)]
    Data(#[from] LoadError),
    #[error("synthetic generator failed after {attempts} attempts: {reason}")]
    Generator { attempts: usize, reason: String },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Static description of a constrained problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: String,
    pub dim: usize,
    /// Number of inequality constraints (p).
    pub n_ineq: usize,
    /// Total number of constraints (m); equalities are `m - p`.
    pub n_constraints: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Equality tolerance.
    pub eps: f64,
}

impl ProblemSpec {
    pub fn boxed(id: impl Into<String>, dim: usize, n_ineq: usize, n_eq: usize, lo: f64, hi: f64) -> Self {
        ProblemSpec {
            id: id.into(),
            dim,
            n_ineq,
            n_constraints: n_ineq + n_eq,
            lower: vec![lo; dim],
            upper: vec![hi; dim],
            eps: DEFAULT_EQUALITY_TOLERANCE,
        }
    }

    pub fn n_eq(&self) -> usize {
        self.n_constraints - self.n_ineq
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(ProblemError::Invalid(format!("{}: bounds length != D", self.id)));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(ProblemError::Invalid(format!("{}: lower >= upper", self.id)));
        }
        if self.n_ineq > self.n_constraints {
            return Err(ProblemError::Invalid(format!("{}: p > m", self.id)));
        }
        if !(self.eps > 0.0) {
            return Err(ProblemError::Invalid(format!("{}: eps must be positive", self.id)));
        }
        Ok(())
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Uniform point in the box, one draw per coordinate.
    pub fn sample_uniform(&self, rng: &mut RunRng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + rng.uniform() * (hi - lo))
            .collect()
    }
}

/// Raw objective and constraint values at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub f: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

/// A constrained minimization problem. Implementations are immutable.
pub trait Problem: Send + Sync + fmt::Debug {
    fn spec(&self) -> &ProblemSpec;

    /// Evaluates a point already known to have length D and lie in bounds.
    fn evaluate_unchecked(&self, x: &[f64]) -> Evaluation;

    fn data_source(&self) -> Option<DataSource> {
        None
    }
}

pub type SharedProblem = Arc<dyn Problem>;

/// Checked evaluation.
pub fn evaluate(problem: &dyn Problem, x: &[f64]) -> Result<Evaluation, ProblemError> {
    let spec = problem.spec();
    if x.len() != spec.dim {
        return Err(ProblemError::Dimension {
            id: spec.id.clone(),
            expected: spec.dim,
            actual: x.len(),
        });
    }
    for (index, (&value, (&lower, &upper))) in x.iter().zip(spec.lower.iter().zip(&spec.upper)).enumerate() {
        if !(value >= lower && value <= upper) {
            return Err(ProblemError::OutOfBounds {
                index,
                value,
                lower,
                upper,
            });
        }
    }
    Ok(problem.evaluate_unchecked(x))
}

/// Evaluates `x` and wraps the result as an [`Individual`].
pub fn evaluate_individual(problem: &dyn Problem, x: Vec<f64>) -> Result<Individual, ProblemError> {
    let e = evaluate(problem, &x)?;
    Ok(Individual::from_values(x, e.f, e.g, e.h, problem.spec().eps))
}

/// A problem paired with the function-evaluation budget of one run.
/// Every evaluation bills exactly one unit.
#[derive(Debug)]
pub struct BudgetedEvaluator<'a> {
    problem: &'a dyn Problem,
    budget: EvalBudget,
}

impl<'a> BudgetedEvaluator<'a> {
    pub fn new(problem: &'a dyn Problem, max_fe: u64) -> Self {
        BudgetedEvaluator {
            problem,
            budget: EvalBudget::new(max_fe),
        }
    }

    pub fn evaluate(&mut self, x: Vec<f64>) -> Result<Individual, ProblemError> {
        let ind = evaluate_individual(self.problem, x)?;
        self.budget.charge(1);
        Ok(ind)
    }

    pub fn budget(&self) -> EvalBudget {
        self.budget
    }

    pub fn problem(&self) -> &'a dyn Problem {
        self.problem
    }
}

/// Fraction of uniform-in-bounds samples with zero violation.
pub fn estimate_feasibility_ratio(problem: &dyn Problem, samples: usize, seed: u64) -> f64 {
    let spec = problem.spec();
    let mut rng = RunRng::seed_from_u64(seed);
    let mut feasible = 0usize;
    for _ in 0..samples.max(1) {
        let x = spec.sample_uniform(&mut rng);
        let e = problem.evaluate_unchecked(&x);
        let ind = Individual::from_values(x, e.f, e.g, e.h, spec.eps);
        if ind.feasible {
            feasible += 1;
        }
    }
    feasible as f64 / samples.max(1) as f64
}

/// `f = sum(x^2)` subject to `1 - sum(x^2) <= 0` on `[-100, 100]^D`.
/// The feasible optimum is any point on the unit sphere, with f = 1.
#[derive(Debug, Clone)]
pub struct SphereRing {
    spec: ProblemSpec,
}

impl SphereRing {
    pub fn new(dim: usize) -> Self {
        SphereRing {
            spec: ProblemSpec::boxed("sphere-ring", dim, 1, 0, -100.0, 100.0),
        }
    }
}

impl Problem for SphereRing {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Evaluation {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Evaluation {
            f: r2,
            g: vec![1.0 - r2],
            h: vec![],
        }
    }
}

type EvalFn = dyn Fn(&[f64]) -> Evaluation + Send + Sync;

/// Problem defined by a closure.
pub struct FnProblem {
    spec: ProblemSpec,
    eval: Box<EvalFn>,
}

impl FnProblem {
    pub fn new<F>(spec: ProblemSpec, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Evaluation + Send + Sync + 'static,
    {
        FnProblem {
            spec,
            eval: Box::new(eval),
        }
    }
}

impl fmt::Debug for FnProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProblem").field("spec", &self.spec).finish()
    }
}

impl Problem for FnProblem {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Evaluation {
        (self.eval)(x)
    }
}

/// Resolves a problem id: `C01`..`C18` (CEC2010) or `sphere-ring`.
pub fn resolve(
    id: &str,
    dim: usize,
    data_dir: Option<&std::path::Path>,
    require_official: bool,
) -> Result<SharedProblem, ProblemError> {
    if id == "sphere-ring" {
        return Ok(Arc::new(SphereRing::new(dim)));
    }
    let func = Cec2010Function::from_id(id).ok_or_else(|| ProblemError::UnknownProblem(id.to_string()))?;
    Ok(Arc::new(Cec2010Problem::load(func, dim, data_dir, require_official)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_ring_at_origin_is_infeasible() {
        let p = SphereRing::new(3);
        let e = evaluate(&p, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.f, 0.0);
        assert_eq!(e.g, vec![1.0]);
        let ind = evaluate_individual(&p, vec![0.0; 3]).unwrap();
        assert!(!ind.feasible);
    }

    #[test]
    fn checked_evaluation_rejects_bad_input() {
        let p = SphereRing::new(3);
        assert!(matches!(evaluate(&p, &[0.0, 0.0]), Err(ProblemError::Dimension { .. })));
        assert!(matches!(
            evaluate(&p, &[0.0, 101.0, 0.0]),
            Err(ProblemError::OutOfBounds { index: 1, .. })
        ));
    }

    #[test]
    fn budget_counts_every_call() {
        let p = SphereRing::new(2);
        let mut ev = BudgetedEvaluator::new(&p, 100);
        for k in 1..=7u64 {
            ev.evaluate(vec![0.5, 0.5]).unwrap();
            assert_eq!(ev.budget().used, k);
        }
    }

    #[test]
    fn feasibility_ratio_extremes() {
        let free = FnProblem::new(ProblemSpec::boxed("free", 2, 0, 0, -1.0, 1.0), |x| Evaluation {
            f: x[0],
            g: vec![],
            h: vec![],
        });
        assert_eq!(estimate_feasibility_ratio(&free, 1000, 1), 1.0);
        let never = FnProblem::new(ProblemSpec::boxed("never", 2, 1, 0, -1.0, 1.0), |x| Evaluation {
            f: x[0],
            g: vec![1.0],
            h: vec![],
        });
        assert_eq!(estimate_feasibility_ratio(&never, 1000, 1), 0.0);
    }

    #[test]
    fn feasibility_ratio_is_seeded() {
        let p = SphereRing::new(2);
        let a = estimate_feasibility_ratio(&p, 500, 9);
        let b = estimate_feasibility_ratio(&p, 500, 9);
        assert_eq!(a, b);
    }
}
