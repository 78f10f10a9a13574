//! Natively coded comparison algorithms.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::constraint::{feasibility_order, Individual, Population};
use crate::problems::ProblemSpec;
use crate::rng::{distinct_triplet, RunRng};

use super::{Operator, RunStats};

/// DE/rand/1/bin, written out by hand. Consumes the random stream exactly
/// like the equivalent DSL rule.
pub(crate) struct De {
    pub f: f64,
    pub cr: f64,
}

impl Operator for De {
    fn offspring(&mut self, pop: &Population, spec: &ProblemSpec, rng: &mut RunRng, _: &mut RunStats) -> Vec<Vec<f64>> {
        let d = spec.dim;
        let m = &pop.members;
        (0..m.len())
            .map(|i| {
                let [r1, r2, r3] = distinct_triplet(rng, m.len(), i);
                let jrand = rng.index(d);
                let mut u = m[i].x.clone();
                for j in 0..d {
                    let v = (m[r1].x[j] + self.f * (m[r2].x[j] - m[r3].x[j])).clamp(spec.lower[j], spec.upper[j]);
                    if rng.uniform() < self.cr || j == jrand {
                        u[j] = v;
                    }
                }
                u
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshadeParams {
    /// Success-history memory size.
    pub memory: usize,
    /// Fraction of the population eligible as p-best.
    pub p_best: f64,
    /// Archive capacity as a multiple of the current population size.
    pub archive_rate: f64,
    pub min_population: usize,
}

impl Default for LshadeParams {
    fn default() -> Self {
        LshadeParams {
            memory: 6,
            p_best: 0.11,
            archive_rate: 2.6,
            min_population: 4,
        }
    }
}

impl LshadeParams {
    /// The customary initial population, 18 per dimension.
    pub fn initial_population(dim: usize) -> usize {
        18 * dim
    }
}

pub(crate) struct Lshade {
    params: LshadeParams,
    initial: usize,
    m_f: Vec<f64>,
    m_cr: Vec<f64>,
    k: usize,
    archive: Vec<Vec<f64>>,
    // per-offspring parameters of the current generation
    f: Vec<f64>,
    cr: Vec<f64>,
}

impl Lshade {
    pub fn new(params: LshadeParams, initial: usize, _dim: usize) -> Self {
        Lshade {
            params,
            initial,
            m_f: vec![0.5; params.memory],
            m_cr: vec![0.5; params.memory],
            k: 0,
            archive: Vec::new(),
            f: Vec::new(),
            cr: Vec::new(),
        }
    }

    fn trim_archive(&mut self, cap: usize, rng: &mut RunRng) {
        while self.archive.len() > cap {
            let i = rng.index(self.archive.len());
            self.archive.swap_remove(i);
        }
    }

    #[cfg(test)]
    pub(crate) fn memory(&self) -> (&[f64], &[f64]) {
        (&self.m_f, &self.m_cr)
    }
}

impl Operator for Lshade {
    fn offspring(&mut self, pop: &Population, spec: &ProblemSpec, rng: &mut RunRng, _: &mut RunStats) -> Vec<Vec<f64>> {
        let m = &pop.members;
        let n = m.len();
        let d = spec.dim;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| feasibility_order(&m[a], &m[b]));
        let top = ((self.params.p_best * n as f64).round() as usize).clamp(2, n);

        self.f.clear();
        self.cr.clear();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let r = rng.index(self.params.memory);
            let cr = (self.m_cr[r] + 0.1 * rng.normal()).clamp(0.0, 1.0);
            let f = loop {
                let c = self.m_f[r] + 0.1 * (PI * (rng.uniform() - 0.5)).tan();
                if c > 0.0 {
                    break c.min(1.0);
                }
            };
            let pbest = order[rng.index(top)];
            let r1 = loop {
                let c = rng.index(n);
                if c != i {
                    break c;
                }
            };
            let pool = n + self.archive.len();
            let r2 = loop {
                let c = rng.index(pool);
                if c != i && c != r1 {
                    break c;
                }
            };
            let x2 = if r2 < n { &m[r2].x } else { &self.archive[r2 - n] };
            let xi = &m[i].x;
            let jrand = rng.index(d);
            let mut u = xi.clone();
            for j in 0..d {
                let v = xi[j] + f * (m[pbest].x[j] - xi[j]) + f * (m[r1].x[j] - x2[j]);
                if rng.uniform() < cr || j == jrand {
                    u[j] = v.clamp(spec.lower[j], spec.upper[j]);
                }
            }
            self.f.push(f);
            self.cr.push(cr);
            out.push(u);
        }
        out
    }

    fn observe(&mut self, parents: &[Individual], offspring: &[Individual], rng: &mut RunRng) {
        let mut s_f = Vec::new();
        let mut s_cr = Vec::new();
        let mut w = Vec::new();
        for (i, (p, o)) in parents.iter().zip(offspring).enumerate() {
            if feasibility_order(o, p) == Ordering::Less {
                let delta = if p.cv != o.cv { p.cv - o.cv } else { p.f - o.f };
                s_f.push(self.f[i]);
                s_cr.push(self.cr[i]);
                w.push(delta.abs().min(f64::MAX));
                self.archive.push(p.x.clone());
            }
        }
        let cap = (self.params.archive_rate * parents.len() as f64).round() as usize;
        self.trim_archive(cap, rng);
        if s_f.is_empty() {
            return;
        }
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = if total > 0.0 && total.is_finite() {
            w.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / s_f.len() as f64; s_f.len()]
        };
        let num: f64 = w.iter().zip(&s_f).map(|(w, f)| w * f * f).sum();
        let den: f64 = w.iter().zip(&s_f).map(|(w, f)| w * f).sum();
        if den > 0.0 {
            self.m_f[self.k] = num / den;
        }
        self.m_cr[self.k] = w.iter().zip(&s_cr).map(|(w, c)| w * c).sum();
        self.k = (self.k + 1) % self.params.memory;
    }

    fn survivors(&mut self, current: usize, fe: u64, max_fe: u64, rng: &mut RunRng) -> usize {
        let min = self.params.min_population as f64;
        let frac = 1.0 - (fe as f64 / max_fe as f64).min(1.0);
        let next = (min + (self.initial as f64 - min) * frac).round() as usize;
        let next = next.clamp(self.params.min_population.min(current), current);
        let cap = (self.params.archive_rate * next as f64).round() as usize;
        self.trim_archive(cap, rng);
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaParams {
    pub crossover_rate: f64,
    /// Per-gene mutation probability; `None` means 1/D.
    pub mutation_rate: Option<f64>,
    pub eta_c: f64,
    pub eta_m: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            crossover_rate: 0.9,
            mutation_rate: None,
            eta_c: 20.0,
            eta_m: 20.0,
        }
    }
}

pub(crate) struct Ga {
    params: GaParams,
    pm: f64,
}

impl Ga {
    pub fn new(params: GaParams, dim: usize) -> Self {
        Ga {
            params,
            pm: params.mutation_rate.unwrap_or(1.0 / dim as f64),
        }
    }

    fn tournament<'p>(&self, m: &'p [Individual], rng: &mut RunRng) -> &'p Individual {
        let a = &m[rng.index(m.len())];
        let b = &m[rng.index(m.len())];
        if feasibility_order(b, a) == Ordering::Less {
            b
        } else {
            a
        }
    }

    fn sbx(&self, a: &mut [f64], b: &mut [f64], rng: &mut RunRng) {
        let e = 1.0 / (self.params.eta_c + 1.0);
        for j in 0..a.len() {
            if rng.uniform() > 0.5 || (a[j] - b[j]).abs() < 1e-14 {
                continue;
            }
            let u = rng.uniform();
            let beta = if u <= 0.5 {
                (2.0 * u).powf(e)
            } else {
                (1.0 / (2.0 * (1.0 - u))).powf(e)
            };
            let (x1, x2) = (a[j], b[j]);
            a[j] = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
            b[j] = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
        }
    }

    fn mutate(&self, x: &mut [f64], spec: &ProblemSpec, rng: &mut RunRng) {
        let e = 1.0 / (self.params.eta_m + 1.0);
        for j in 0..x.len() {
            if self.pm <= 0.0 || rng.uniform() >= self.pm {
                continue;
            }
            let u = rng.uniform();
            let delta = if u < 0.5 {
                (2.0 * u).powf(e) - 1.0
            } else {
                1.0 - (2.0 * (1.0 - u)).powf(e)
            };
            x[j] = (x[j] + delta * (spec.upper[j] - spec.lower[j])).clamp(spec.lower[j], spec.upper[j]);
        }
    }
}

impl Operator for Ga {
    fn offspring(&mut self, pop: &Population, spec: &ProblemSpec, rng: &mut RunRng, _: &mut RunStats) -> Vec<Vec<f64>> {
        let m = &pop.members;
        let mut out = Vec::with_capacity(m.len() + 1);
        while out.len() < m.len() {
            let mut a = self.tournament(m, rng).x.clone();
            let mut b = self.tournament(m, rng).x.clone();
            if self.params.crossover_rate > 0.0 && rng.uniform() < self.params.crossover_rate {
                self.sbx(&mut a, &mut b, rng);
            }
            self.mutate(&mut a, spec, rng);
            self.mutate(&mut b, spec, rng);
            out.push(a);
            out.push(b);
        }
        out.truncate(m.len());
        out
    }
}
