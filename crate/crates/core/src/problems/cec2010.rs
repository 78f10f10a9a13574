//! The 18 scalable problems of the CEC2010 constrained real-parameter suite.
//!
//! Notation follows the suite's technical report: `z = x - o` (or
//! `x + 1 - o` for Rosenbrock objectives), and rotated terms use the row
//! vector product `y = (x - o) M`.

use std::f64::consts::{E, PI};
use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;

use super::data::{self, synthetic_problem_data, DataSource, LoadError, Matrix, ProblemData};
use super::{Evaluation, Problem, ProblemError, ProblemSpec};
use crate::rng::mix;

const MANIFEST_TOML: &str = include_str!("../../../../data/cec2010/manifest.toml");

/// Offset used by C06 around its rotation.
const C06_OFFSET: f64 = 483.6106156535;

#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub equality_tolerance: f64,
    pub dimensions: Vec<usize>,
    pub problem: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub p: usize,
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
    pub rotations: usize,
    pub files: Vec<String>,
}

impl ManifestEntry {
    pub fn files_for(&self, dim: usize) -> Vec<String> {
        self.files.iter().map(|f| f.replace("{D}", &dim.to_string())).collect()
    }
}

pub fn manifest() -> &'static Manifest {
    static MANIFEST: OnceLock<Manifest> = OnceLock::new();
    MANIFEST.get_or_init(|| toml::from_str(MANIFEST_TOML).expect("embedded CEC2010 manifest is valid TOML"))
}

pub fn parse_manifest(text: &str) -> Result<Manifest, toml::de::Error> {
    toml::from_str(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cec2010Function(u8);

impl Cec2010Function {
    pub fn new(number: u8) -> Option<Self> {
        (1..=18).contains(&number).then_some(Cec2010Function(number))
    }

    pub fn all() -> impl Iterator<Item = Cec2010Function> {
        (1..=18).map(Cec2010Function)
    }

    pub fn from_id(id: &str) -> Option<Self> {
        let digits = id.strip_prefix('C').or_else(|| id.strip_prefix('c'))?;
        digits.parse::<u8>().ok().and_then(Self::new)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn id(self) -> String {
        format!("C{:02}", self.0)
    }

    pub fn manifest_entry(self) -> &'static ManifestEntry {
        &manifest().problem[self.0 as usize - 1]
    }

    pub fn spec(self, dim: usize) -> ProblemSpec {
        let e = self.manifest_entry();
        ProblemSpec {
            id: self.id(),
            dim,
            n_ineq: e.p,
            n_constraints: e.m,
            lower: vec![e.lower; dim],
            upper: vec![e.upper; dim],
            eps: manifest().equality_tolerance,
        }
    }

    /// Seed of the synthetic substitute data for this instance.
    pub fn synthetic_seed(self, dim: usize) -> u64 {
        mix(0xC2010, self.0 as u64 * 1000 + dim as u64)
    }
}

#[derive(Debug, Clone)]
pub struct Cec2010Problem {
    func: Cec2010Function,
    spec: ProblemSpec,
    shift: Vec<f64>,
    rotation: Option<Matrix>,
    source: DataSource,
}

impl Cec2010Problem {
    /// Loads an instance. Official files under `data_dir` are used when the
    /// shift file exists; otherwise seeded synthetic data is generated unless
    /// `require_official` is set.
    pub fn load(
        func: Cec2010Function,
        dim: usize,
        data_dir: Option<&Path>,
        require_official: bool,
    ) -> Result<Self, ProblemError> {
        if dim < 2 || (require_official && !manifest().dimensions.contains(&dim)) {
            return Err(ProblemError::UnsupportedDimension { id: func.id(), dim });
        }
        let spec = func.spec(dim);
        let n_rot = func.manifest_entry().rotations;
        let official = data_dir.filter(|d| data::shift_file(d, &spec.id, dim).exists());
        let data = match (official, data_dir) {
            (Some(dir), _) => data::load_problem_data(dir, &spec.id, dim, n_rot, &spec.lower, &spec.upper)?,
            (None, Some(dir)) if require_official => {
                return Err(LoadError::Missing(data::shift_file(dir, &spec.id, dim)).into())
            }
            (None, None) if require_official => {
                return Err(ProblemError::Invalid(format!(
                    "{}: official data required but no data directory given",
                    spec.id
                )))
            }
            _ => synthetic_problem_data(func.synthetic_seed(dim), &spec.lower, &spec.upper, n_rot),
        };
        Self::with_data(func, dim, data)
    }

    pub fn with_data(func: Cec2010Function, dim: usize, data: ProblemData) -> Result<Self, ProblemError> {
        let spec = func.spec(dim);
        let n_rot = func.manifest_entry().rotations;
        if data.shift.len() != dim || data.rotations.len() != n_rot {
            return Err(ProblemError::Invalid(format!(
                "{}: data has shift of length {} and {} rotations, expected {} and {}",
                spec.id,
                data.shift.len(),
                data.rotations.len(),
                dim,
                n_rot
            )));
        }
        Ok(Cec2010Problem {
            func,
            spec,
            shift: data.shift,
            rotation: data.rotations.into_iter().next(),
            source: data.source,
        })
    }

    pub fn function(&self) -> Cec2010Function {
        self.func
    }

    pub fn data(&self) -> ProblemData {
        ProblemData {
            shift: self.shift.clone(),
            rotations: self.rotation.iter().cloned().collect(),
            source: self.source,
        }
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(a, o)| a - o).collect()
    }

    fn rotated(&self, v: &[f64]) -> Vec<f64> {
        match &self.rotation {
            Some(m) => row_times_matrix(v, m),
            None => v.to_vec(),
        }
    }
}

fn row_times_matrix(v: &[f64], m: &Matrix) -> Vec<f64> {
    let d = v.len();
    let mut out = vec![0.0; d];
    for (vi, row) in v.iter().zip(m) {
        for (o, mij) in out.iter_mut().zip(row) {
            *o += vi * mij;
        }
    }
    out
}

fn plus_one(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| v + 1.0).collect()
}

fn rosenbrock(z: &[f64]) -> f64 {
    z.windows(2)
        .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

fn max_of(z: &[f64]) -> f64 {
    z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn mean_of(d: usize, it: impl Iterator<Item = f64>) -> f64 {
    it.sum::<f64>() / d as f64
}

fn rastrigin_term(v: f64) -> f64 {
    v * v - 10.0 * (2.0 * PI * v).cos() + 10.0
}

fn griewank(z: &[f64]) -> f64 {
    let sum: f64 = z.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = z
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum - prod + 1.0
}

fn sq_diff_adjacent(z: &[f64]) -> f64 {
    z.windows(2).map(|w| (w[0] - w[1]).powi(2)).sum()
}

fn schwefel_sin(v: f64) -> f64 {
    v * v.abs().sqrt().sin()
}

fn ackley_like_constraint(y: &[f64]) -> f64 {
    let d = y.len();
    0.5 - (-0.1 * mean_of(d, y.iter().map(|v| v * v)).sqrt()).exp()
        - 3.0 * mean_of(d, y.iter().map(|v| (0.1 * v).cos())).exp()
        + E
}

impl Problem for Cec2010Problem {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn data_source(&self) -> Option<DataSource> {
        Some(self.source)
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Evaluation {
        let d = x.len();
        let df = d as f64;
        let z = self.shifted(x);
        let (f, g, h) = match self.func.0 {
            1 => {
                let s4: f64 = z.iter().map(|v| v.cos().powi(4)).sum();
                let p2: f64 = z.iter().map(|v| v.cos().powi(2)).product();
                let den = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i + 1) as f64 * v * v)
                    .sum::<f64>()
                    .sqrt();
                let f = -((s4 - 2.0 * p2) / den).abs();
                let g1 = 0.75 - z.iter().product::<f64>();
                let g2 = z.iter().sum::<f64>() - 7.5 * df;
                (f, vec![g1, g2], vec![])
            }
            2 => {
                let ras = mean_of(d, z.iter().map(|&v| rastrigin_term(v)));
                let h = mean_of(d, z.iter().map(|&v| rastrigin_term(v - 0.5))) - 20.0;
                (max_of(&z), vec![10.0 - ras, ras - 15.0], vec![h])
            }
            3 => (rosenbrock(&z), vec![], vec![sq_diff_adjacent(&z)]),
            4 => {
                let half = d / 2;
                let h1 = mean_of(d, z.iter().map(|v| v * v.abs().sqrt().cos()));
                let h2 = sq_diff_adjacent(&z[..half]);
                let h3: f64 = z[half..].windows(2).map(|w| (w[0] * w[0] - w[1]).powi(2)).sum();
                let h4: f64 = z.iter().sum();
                (max_of(&z), vec![], vec![h1, h2, h3, h4])
            }
            5 => {
                let h1 = mean_of(d, z.iter().map(|&v| -schwefel_sin(v)));
                let h2 = mean_of(d, z.iter().map(|v| -v * (0.5 * v.abs().sqrt()).cos()));
                (max_of(&z), vec![], vec![h1, h2])
            }
            6 => {
                let offset: Vec<f64> = z.iter().map(|v| v + C06_OFFSET).collect();
                let y: Vec<f64> = self.rotated(&offset).iter().map(|v| v - C06_OFFSET).collect();
                let h1 = mean_of(d, y.iter().map(|&v| -schwefel_sin(v)));
                let h2 = mean_of(d, y.iter().map(|v| -v * (0.5 * v.abs().sqrt()).cos()));
                (max_of(&z), vec![], vec![h1, h2])
            }
            7 | 8 => {
                let y = self.rotated(&z);
                (rosenbrock(&plus_one(&z)), vec![ackley_like_constraint(&y)], vec![])
            }
            9 | 10 => {
                let y = self.rotated(&z);
                let h: f64 = y.iter().map(|&v| schwefel_sin(v)).sum();
                (rosenbrock(&plus_one(&z)), vec![], vec![h])
            }
            11 => {
                let f = mean_of(d, z.iter().map(|v| -v * (2.0 * v.abs().sqrt()).cos()));
                let y = self.rotated(&plus_one(&z));
                (f, vec![], vec![rosenbrock(&y)])
            }
            12 => {
                let f: f64 = z.iter().map(|&v| schwefel_sin(v)).sum();
                let h: f64 = z.windows(2).map(|w| (w[0] * w[0] - w[1]).powi(2)).sum();
                let g: f64 = z.iter().map(|v| v - 100.0 * (0.1 * v).cos() + 10.0).sum();
                (f, vec![g], vec![h])
            }
            13 => {
                let f = mean_of(d, z.iter().map(|&v| -schwefel_sin(v)));
                let sq: f64 = z.iter().map(|v| v * v).sum();
                let g1 = -50.0 + sq / (100.0 * df);
                let g2 = 50.0 / df * z.iter().map(|v| (PI * v / 50.0).sin()).sum::<f64>();
                let g3 = 75.0 - 50.0 * griewank(&z);
                (f, vec![g1, g2, g3], vec![])
            }
            14 | 15 => {
                let y = self.rotated(&z);
                let g1 = y.iter().map(|v| -v * v.abs().sqrt().cos()).sum::<f64>() - df;
                let g2 = y.iter().map(|v| v * v.abs().sqrt().cos()).sum::<f64>() - df;
                let g3 = y.iter().map(|&v| schwefel_sin(v)).sum::<f64>() - 10.0 * df;
                (rosenbrock(&plus_one(&z)), vec![g1, g2, g3], vec![])
            }
            16 => {
                let g1: f64 = z.iter().map(|v| v * v - 100.0 * (PI * v).cos() + 10.0).sum();
                let g2: f64 = z.iter().product();
                let s: f64 = z.iter().map(|&v| schwefel_sin(v)).sum();
                let neg: f64 = z.iter().map(|&v| -schwefel_sin(v)).sum();
                (griewank(&z), vec![g1, g2], vec![s, neg])
            }
            17 => {
                let g1: f64 = z.iter().product();
                let g2: f64 = z.iter().sum();
                let h: f64 = z.iter().map(|v| v * (4.0 * v.abs().sqrt()).sin()).sum();
                (sq_diff_adjacent(&z), vec![g1, g2], vec![h])
            }
            18 => {
                let g = mean_of(d, z.iter().map(|&v| -schwefel_sin(v)));
                let h = mean_of(d, z.iter().map(|&v| schwefel_sin(v)));
                (sq_diff_adjacent(&z), vec![g], vec![h])
            }
            _ => unreachable!("function number validated at construction"),
        };
        Evaluation { f, g, h }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::evaluate;
    use crate::rng::RunRng;

    #[test]
    fn manifest_lists_all_problems() {
        let m = manifest();
        assert_eq!(m.problem.len(), 18);
        assert_eq!(m.equality_tolerance, 1e-4);
        for (i, e) in m.problem.iter().enumerate() {
            assert_eq!(e.id, format!("C{:02}", i + 1));
            assert!(e.p <= e.m);
            assert_eq!(e.files.len(), 1 + e.rotations);
        }
    }

    #[test]
    fn constraint_lengths_match_manifest() {
        let mut rng = RunRng::seed_from_u64(1);
        for func in Cec2010Function::all() {
            for dim in [10, 30] {
                let p = Cec2010Problem::load(func, dim, None, false).unwrap();
                let x = p.spec().sample_uniform(&mut rng);
                let e = evaluate(&p, &x).unwrap();
                assert_eq!(e.g.len(), p.spec().n_ineq, "{}", p.spec().id);
                assert_eq!(e.h.len(), p.spec().n_eq(), "{}", p.spec().id);
                assert_eq!(p.data_source(), Some(DataSource::SyntheticSeeded));
            }
        }
    }

    #[test]
    fn ids_round_trip() {
        assert_eq!(Cec2010Function::from_id("C07").unwrap().id(), "C07");
        assert!(Cec2010Function::from_id("C19").is_none());
        assert!(Cec2010Function::from_id("X01").is_none());
    }

    #[test]
    fn c07_at_shift_is_feasible() {
        let p = Cec2010Problem::load(Cec2010Function::new(7).unwrap(), 10, None, false).unwrap();
        let o = p.data().shift;
        let e = evaluate(&p, &o).unwrap();
        // z = 1 is the Rosenbrock optimum and y = 0 gives g = -0.5 - 2e
        assert_eq!(e.f, 0.0);
        assert!((e.g[0] - (-0.5 - 2.0 * E)).abs() < 1e-12);
    }

    #[test]
    fn official_dimension_required_when_strict() {
        let f = Cec2010Function::new(1).unwrap();
        assert!(matches!(
            Cec2010Problem::load(f, 7, None, true),
            Err(ProblemError::UnsupportedDimension { .. })
        ));
        let dir = tempfile::tempdir().unwrap();
        let err = Cec2010Problem::load(f, 10, Some(dir.path()), true).unwrap_err();
        assert!(err.to_string().contains("C01_shift_D10.txt"));
    }
}
