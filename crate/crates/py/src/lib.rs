//! Python bindings: problems, rules, single runs and the statistics helpers.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use metaevolve::bench::{self, Mark};
use metaevolve::constraint::{self, DEFAULT_EQUALITY_TOLERANCE};
use metaevolve::engine::{self, Algorithm, RunConfig};
use metaevolve::problems::{self, oracle, Cec2010Function, Cec2010Problem, SharedProblem};
use metaevolve::ruledsl::{self, RuleAst, BUILTIN_SOURCES};

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A benchmark problem: `C01`..`C18` or `sphere-ring`.
#[pyclass(frozen)]
struct Problem {
    inner: SharedProblem,
}

#[pymethods]
impl Problem {
    #[new]
    #[pyo3(signature = (id, dim = 10, data_dir = None))]
    fn new(id: &str, dim: usize, data_dir: Option<PathBuf>) -> PyResult<Self> {
        let inner = problems::resolve(id, dim, data_dir.as_deref(), false).map_err(value_error)?;
        Ok(Problem { inner })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.spec().id.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.spec().dim
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.inner.spec().lower.clone()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.inner.spec().upper.clone()
    }

    #[getter]
    fn n_ineq(&self) -> usize {
        self.inner.spec().n_ineq
    }

    #[getter]
    fn n_eq(&self) -> usize {
        self.inner.spec().n_eq()
    }

    /// `(f, g, h, cv, feasible)` at `x`.
    fn evaluate(&self, x: Vec<f64>) -> PyResult<(f64, Vec<f64>, Vec<f64>, f64, bool)> {
        let ind = problems::evaluate_individual(&*self.inner, x).map_err(value_error)?;
        Ok((ind.f, ind.g, ind.h, ind.cv, ind.feasible))
    }

    fn feasibility_ratio(&self, samples: usize, seed: u64) -> f64 {
        problems::estimate_feasibility_ratio(&*self.inner, samples, seed)
    }

    fn __repr__(&self) -> String {
        let s = self.inner.spec();
        format!("Problem('{}', dim={})", s.id, s.dim)
    }
}

/// A parsed update rule.
#[pyclass(frozen)]
struct Rule {
    ast: RuleAst,
}

#[pymethods]
impl Rule {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Rule {
            ast: ruledsl::parse(text).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        ruledsl::builtin_rule(name)
            .map(|ast| Rule { ast })
            .ok_or_else(|| value_error(format!("unknown builtin rule `{name}`")))
    }

    /// Canonical text.
    #[getter]
    fn text(&self) -> String {
        ruledsl::print(&self.ast)
    }

    #[getter]
    fn params(&self) -> Vec<(String, f64)> {
        self.ast.params.iter().map(|p| (p.name.clone(), p.value)).collect()
    }

    fn __eq__(&self, other: &Rule) -> bool {
        self.ast == other.ast
    }

    fn __repr__(&self) -> String {
        format!("Rule({:?})", self.text())
    }
}

#[pyclass(frozen, get_all)]
struct RunResult {
    algorithm: String,
    best_x: Vec<f64>,
    best_f: f64,
    best_cv: f64,
    feasible: bool,
    fe_used: u64,
    generations: usize,
    /// `(fe, best_cv, best_f or None)` per logged generation.
    history: Vec<(u64, f64, Option<f64>)>,
    events: Vec<String>,
}

#[pymethods]
impl RunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(algorithm='{}', best_f={:e}, best_cv={:e}, feasible={}, fe_used={})",
            self.algorithm, self.best_f, self.best_cv, self.feasible, self.fe_used
        )
    }
}

/// One seeded run. `algorithm` is a benchmark tag (`de`, `lshade`, `ga`,
/// `rule:<name>`, ...) or a `Rule`.
#[pyfunction]
#[pyo3(signature = (problem, algorithm = None, rule = None, population = None, max_fe = 20_000, seed = 1))]
fn run(
    py: Python<'_>,
    problem: &Problem,
    algorithm: Option<&str>,
    rule: Option<&Rule>,
    population: Option<usize>,
    max_fe: u64,
    seed: u64,
) -> PyResult<RunResult> {
    let dim = problem.inner.spec().dim;
    let (alg, n) = match (algorithm, rule) {
        (Some(_), Some(_)) => return Err(value_error("pass either algorithm or rule, not both")),
        (_, Some(r)) => (
            Algorithm::rule("rule", r.ast.clone()),
            population.unwrap_or_else(|| engine::default_population(dim)),
        ),
        (tag, None) => {
            let resolved = bench::resolve_algorithm(tag.unwrap_or("de"), dim, population).map_err(value_error)?;
            (resolved.algorithm, resolved.population)
        }
    };
    let config = RunConfig::new(alg, n, max_fe, seed);
    let inner = problem.inner.clone();
    let log = py
        .detach(move || engine::run(&*inner, &config))
        .map_err(value_error)?;
    let s = log.summary;
    Ok(RunResult {
        algorithm: s.algorithm,
        best_x: s.best_x,
        best_f: s.best_f,
        best_cv: s.best_cv,
        feasible: s.feasible,
        fe_used: s.fe_used,
        generations: s.generations,
        history: log.entries.iter().map(|e| (e.fe, e.best_cv, e.best_f)).collect(),
        events: s.events,
    })
}

/// Aggregate violation of constraint values.
#[pyfunction]
#[pyo3(signature = (g, h, eps = DEFAULT_EQUALITY_TOLERANCE))]
fn compute_cv(g: Vec<f64>, h: Vec<f64>, eps: f64) -> PyResult<f64> {
    constraint::compute_cv(&g, &h, eps).map_err(value_error)
}

/// `"+"`, `"-"` or `"="` for `other` against `reference`; `None` when a
/// sample has fewer than two values.
#[pyfunction]
#[pyo3(signature = (reference, other, alpha = 0.05))]
fn significance_mark(reference: Vec<f64>, other: Vec<f64>, alpha: f64) -> Option<&'static str> {
    bench::significance_mark(&reference, &other, alpha).map(Mark::symbol)
}

#[pyfunction]
fn rank_sum_p(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(value_error("both samples must be non-empty"));
    }
    Ok(bench::rank_sum_p(&a, &b))
}

/// Summary of best-of-run values (`None` for runs without a feasible point).
#[pyfunction]
fn summarize_bests(bests: Vec<Option<f64>>) -> BTreeMap<&'static str, Option<f64>> {
    let s = bench::summarize_bests(&bests);
    BTreeMap::from([
        ("runs", Some(s.runs as f64)),
        ("feasible_runs", Some(s.feasible_runs as f64)),
        ("feasibility_rate", Some(s.feasibility_rate)),
        ("v_avg", s.v_avg),
        ("v_std", s.v_std),
        ("best", s.best),
        ("median", s.median),
        ("worst", s.worst),
    ])
}

#[pyfunction]
fn builtin_rules() -> BTreeMap<&'static str, &'static str> {
    BUILTIN_SOURCES.iter().copied().collect()
}

#[pyfunction]
fn problem_ids() -> Vec<String> {
    Cec2010Function::all().map(|f| f.id()).chain(["sphere-ring".to_string()]).collect()
}

/// Largest relative deviation from the reference evaluator per CEC2010 instance.
#[pyfunction]
#[pyo3(signature = (dim = 10, points = 100, seed = 1))]
fn oracle_check(dim: usize, points: usize, seed: u64) -> PyResult<BTreeMap<String, f64>> {
    Cec2010Function::all()
        .map(|f| {
            let p = Cec2010Problem::load(f, dim, None, false).map_err(value_error)?;
            Ok((f.id(), oracle::max_deviation(&p, points, seed)))
        })
        .collect()
}

#[pymodule]
fn metaevolve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Rule>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compute_cv, m)?)?;
    m.add_function(wrap_pyfunction!(significance_mark, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sum_p, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_bests, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_rules, m)?)?;
    m.add_function(wrap_pyfunction!(problem_ids, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    Ok(())
}
