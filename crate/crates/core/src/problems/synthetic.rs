//! Seeded generator of training COPs for meta-training.
//!
//! Each instance has a shifted sphere, Rosenbrock or Rastrigin objective on
//! `[-5, 5]^D`, linear or ball-shaped inequality constraints calibrated by
//! Monte Carlo to a target feasibility ratio, and affine equality constraints
//! that all pass through one inequality-feasible anchor point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Evaluation, Problem, ProblemError, ProblemSpec};
use crate::constraint::DEFAULT_EQUALITY_TOLERANCE;
use crate::rng::{mix, RunRng};

const BOUND: f64 = 5.0;
const CALIBRATION_SAMPLES: usize = 10_000;
const MAX_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyntheticObjective {
    Sphere,
    Rosenbrock,
    Rastrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InequalityShape {
    /// `a . x - t <= 0`
    Linear { a: Vec<f64> },
    /// `|x - c|^2 - t <= 0`
    Ball { c: Vec<f64> },
}

impl InequalityShape {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            InequalityShape::Linear { a } => a.iter().zip(x).map(|(a, x)| a * x).sum(),
            InequalityShape::Ball { c } => c.iter().zip(x).map(|(c, x)| (x - c).powi(2)).sum(),
        }
    }

    /// Maximum of the shape over the box `[lo, hi]^D`.
    fn max_over_box(&self, lo: f64, hi: f64) -> f64 {
        match self {
            InequalityShape::Linear { a } => a.iter().map(|a| (a * lo).max(a * hi)).sum(),
            InequalityShape::Ball { c } => c.iter().map(|c| (lo - c).powi(2).max((hi - c).powi(2))).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub shape: InequalityShape,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equality {
    pub normal: Vec<f64>,
    pub anchor_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCop {
    pub spec: ProblemSpec,
    pub seed: u64,
    pub objective: SyntheticObjective,
    pub optimum: Vec<f64>,
    pub inequalities: Vec<Inequality>,
    pub equalities: Vec<Equality>,
    /// Inequality-feasible point shared by all equality hyperplanes.
    pub anchor: Option<Vec<f64>>,
    pub target_feasibility: f64,
}

impl Problem for SyntheticCop {
    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Evaluation {
        let z: Vec<f64> = x.iter().zip(&self.optimum).map(|(x, o)| x - o).collect();
        let f = match self.objective {
            SyntheticObjective::Sphere => z.iter().map(|v| v * v).sum(),
            SyntheticObjective::Rosenbrock => z
                .windows(2)
                .map(|w| {
                    let (a, b) = (w[0] + 1.0, w[1] + 1.0);
                    100.0 * (a * a - b).powi(2) + (a - 1.0).powi(2)
                })
                .sum(),
            SyntheticObjective::Rastrigin => z
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
                .sum(),
        };
        let g = self
            .inequalities
            .iter()
            .map(|c| c.shape.value(x) - c.threshold)
            .collect();
        let h = self
            .equalities
            .iter()
            .map(|e| e.normal.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - e.anchor_dot)
            .collect();
        Evaluation { f, g, h }
    }
}

fn unit_gaussian(rng: &mut RunRng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Generates a training COP. Deterministic in `seed`.
pub fn synthesize_training_cop(
    seed: u64,
    dim: usize,
    n_ineq: usize,
    n_eq: usize,
    target_feasibility: f64,
) -> Result<SyntheticCop, ProblemError> {
    if dim < 2 {
        return Err(ProblemError::Invalid("synthetic COP needs D >= 2".into()));
    }
    if n_ineq + n_eq == 0 {
        return Err(ProblemError::Invalid("synthetic COP needs at least one constraint".into()));
    }
    if !(target_feasibility > 0.0 && target_feasibility <= 1.0) {
        return Err(ProblemError::Invalid(format!(
            "target feasibility {target_feasibility} outside (0, 1]"
        )));
    }
    let mut last_reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        match try_generate(mix(seed, attempt as u64), seed, dim, n_ineq, n_eq, target_feasibility) {
            Ok(cop) => return Ok(cop),
            Err(reason) => last_reason = reason,
        }
    }
    Err(ProblemError::Generator {
        attempts: MAX_ATTEMPTS,
        reason: last_reason,
    })
}

fn try_generate(
    stream: u64,
    seed: u64,
    dim: usize,
    n_ineq: usize,
    n_eq: usize,
    target: f64,
) -> Result<SyntheticCop, String> {
    let mut rng = RunRng::seed_from_u64(stream);
    let objective = match rng.index(3) {
        0 => SyntheticObjective::Sphere,
        1 => SyntheticObjective::Rosenbrock,
        _ => SyntheticObjective::Rastrigin,
    };
    let optimum: Vec<f64> = (0..dim).map(|_| BOUND * 0.6 * (2.0 * rng.uniform() - 1.0)).collect();

    let shapes: Vec<InequalityShape> = (0..n_ineq)
        .map(|_| {
            if rng.uniform() < 0.5 {
                InequalityShape::Linear {
                    a: unit_gaussian(&mut rng, dim),
                }
            } else {
                InequalityShape::Ball {
                    c: (0..dim).map(|_| BOUND * 0.8 * (2.0 * rng.uniform() - 1.0)).collect(),
                }
            }
        })
        .collect();

    let samples: Vec<Vec<f64>> = (0..CALIBRATION_SAMPLES)
        .map(|_| (0..dim).map(|_| -BOUND + 2.0 * BOUND * rng.uniform()).collect())
        .collect();
    let values: Vec<Vec<f64>> = shapes
        .iter()
        .map(|s| samples.iter().map(|x| s.value(x)).collect())
        .collect();

    let thresholds: Vec<f64> = if target >= 1.0 {
        shapes.iter().map(|s| s.max_over_box(-BOUND, BOUND)).collect()
    } else {
        let sorted: Vec<Vec<f64>> = values
            .iter()
            .map(|v| {
                let mut v = v.clone();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        let joint = |level: f64| -> (Vec<f64>, f64) {
            let t: Vec<f64> = sorted.iter().map(|s| quantile(s, level)).collect();
            let ok = (0..samples.len())
                .filter(|&i| values.iter().zip(&t).all(|(v, t)| v[i] <= *t))
                .count();
            (t, ok as f64 / samples.len() as f64)
        };
        // joint feasibility is monotone in the per-constraint quantile level
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if joint(mid).1 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        joint(hi).0
    };

    let inequalities: Vec<Inequality> = shapes
        .into_iter()
        .zip(thresholds)
        .map(|(shape, threshold)| Inequality { shape, threshold })
        .collect();

    let (anchor, equalities) = if n_eq == 0 {
        (None, Vec::new())
    } else {
        let anchor = samples
            .iter()
            .find(|x| {
                inequalities
                    .iter()
                    .all(|c| c.shape.value(x) - c.threshold <= 0.0)
                    && x.iter().all(|v| v.abs() <= 0.9 * BOUND)
            })
            .cloned()
            .ok_or_else(|| "no inequality-feasible anchor for the equality constraints".to_string())?;
        let eqs = (0..n_eq)
            .map(|_| {
                let normal = unit_gaussian(&mut rng, dim);
                let anchor_dot = normal.iter().zip(&anchor).map(|(a, x)| a * x).sum();
                Equality { normal, anchor_dot }
            })
            .collect();
        (Some(anchor), eqs)
    };

    let spec = ProblemSpec {
        id: format!("syn-s{seed}-d{dim}-i{n_ineq}-e{n_eq}"),
        dim,
        n_ineq,
        n_constraints: n_ineq + n_eq,
        lower: vec![-BOUND; dim],
        upper: vec![BOUND; dim],
        eps: DEFAULT_EQUALITY_TOLERANCE,
    };
    Ok(SyntheticCop {
        spec,
        seed,
        objective,
        optimum,
        inequalities,
        equalities,
        anchor,
        target_feasibility: target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::estimate_feasibility_ratio;

    #[test]
    fn full_target_is_vacuous() {
        let cop = synthesize_training_cop(1, 5, 1, 0, 1.0).unwrap();
        assert_eq!(estimate_feasibility_ratio(&cop, 10_000, 99), 1.0);
        // corners are the extreme points of both shapes
        let corner = vec![BOUND; 5];
        assert!(cop.evaluate_unchecked(&corner).g[0] <= 0.0);
        let corner = vec![-BOUND; 5];
        assert!(cop.evaluate_unchecked(&corner).g[0] <= 0.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = synthesize_training_cop(7, 6, 2, 1, 0.5).unwrap();
        let b = synthesize_training_cop(7, 6, 2, 1, 0.5).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn low_target_gives_low_ratio() {
        let cop = synthesize_training_cop(3, 5, 2, 0, 0.1).unwrap();
        let r = estimate_feasibility_ratio(&cop, 10_000, 12345);
        assert!((0.0..=0.25).contains(&r), "ratio {r}");
    }

    #[test]
    fn calibration_tracks_target() {
        for (seed, target) in [(11, 0.3), (12, 0.6), (13, 0.85)] {
            let cop = synthesize_training_cop(seed, 8, 3, 0, target).unwrap();
            let r = estimate_feasibility_ratio(&cop, 10_000, seed + 1000);
            assert!((r - target).abs() <= 0.15, "seed {seed}: {r} vs {target}");
        }
    }

    #[test]
    fn equality_anchor_is_feasible() {
        let cop = synthesize_training_cop(21, 4, 1, 2, 0.5).unwrap();
        assert_eq!(cop.equalities.len(), 2);
        assert_eq!(cop.spec.n_eq(), 2);
        let anchor = cop.anchor.clone().unwrap();
        let e = cop.evaluate_unchecked(&anchor);
        assert!(e.h.iter().all(|h| h.abs() < 1e-12));
        assert!(e.g.iter().all(|g| *g <= 0.0));
    }

    #[test]
    fn rejects_degenerate_configuration() {
        assert!(synthesize_training_cop(1, 1, 1, 0, 0.5).is_err());
        assert!(synthesize_training_cop(1, 4, 0, 0, 0.5).is_err());
        assert!(synthesize_training_cop(1, 4, 1, 0, 0.0).is_err());
    }
}
