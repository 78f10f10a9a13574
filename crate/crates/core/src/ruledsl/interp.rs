use super::ast::{BinOp, Expr, Func, RuleAst};
use crate::constraint::Individual;
use crate::rng::{distinct_triplet, RunRng};

/// Read-only view of the population plus the run's random stream.
pub struct RuleContext<'a> {
    /// Index of the target individual in `members`.
    pub target: usize,
    pub members: &'a [Individual],
    pub best: &'a Individual,
    /// Population centroid.
    pub mean: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub rng: &'a mut RunRng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub offspring: Vec<f64>,
    /// Components that came out non-finite and were redrawn in bounds.
    pub resampled: usize,
    pub donors: [usize; 3],
}

#[derive(Debug, Clone)]
enum Value {
    S(f64),
    V(Vec<f64>),
}

fn map2(op: impl Fn(f64, f64) -> f64, a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::S(a), Value::S(b)) => Value::S(op(a, b)),
        (Value::S(a), Value::V(mut b)) => {
            b.iter_mut().for_each(|v| *v = op(a, *v));
            Value::V(b)
        }
        (Value::V(mut a), Value::S(b)) => {
            a.iter_mut().for_each(|v| *v = op(*v, b));
            Value::V(a)
        }
        (Value::V(mut a), Value::V(b)) => {
            a.iter_mut().zip(b).for_each(|(v, w)| *v = op(*v, w));
            Value::V(a)
        }
    }
}

struct Machine<'r, 'c, 'a> {
    ctx: &'c mut RuleContext<'a>,
    donors: [usize; 3],
    env: Vec<(&'r str, Value)>,
}

impl Machine<'_, '_, '_> {
    fn var(&self, name: &str) -> Value {
        if let Some((_, v)) = self.env.iter().rev().find(|(n, _)| *n == name) {
            return v.clone();
        }
        let ctx = &*self.ctx;
        let target = &ctx.members[ctx.target];
        match name {
            "x" => Value::V(target.x.clone()),
            "best" => Value::V(ctx.best.x.clone()),
            "r1" => Value::V(ctx.members[self.donors[0]].x.clone()),
            "r2" => Value::V(ctx.members[self.donors[1]].x.clone()),
            "r3" => Value::V(ctx.members[self.donors[2]].x.clone()),
            "mean" => Value::V(ctx.mean.to_vec()),
            "lb" => Value::V(ctx.lower.to_vec()),
            "ub" => Value::V(ctx.upper.to_vec()),
            "cv" => Value::S(target.cv),
            "f" => Value::S(target.f),
            "dim" => Value::S(target.x.len() as f64),
            _ => unreachable!("identifier `{name}` passed the checker"),
        }
    }

    fn eval(&mut self, e: &Expr) -> Value {
        match e {
            Expr::Num(v) => Value::S(*v),
            Expr::Var(name) => self.var(name),
            Expr::Neg(inner) => map2(|a, _| -a, self.eval(inner), Value::S(0.0)),
            Expr::Binary(op, lhs, rhs) => {
                let a = self.eval(lhs);
                let b = self.eval(rhs);
                let op: BinOp = *op;
                map2(|x, y| op.apply(x, y), a, b)
            }
            Expr::Call(func, args) => {
                let vals: Vec<Value> = args.iter().map(|a| self.eval(a)).collect();
                self.call(*func, vals)
            }
        }
    }

    fn call(&mut self, func: Func, mut args: Vec<Value>) -> Value {
        match func {
            Func::Rand => Value::S(self.ctx.rng.uniform()),
            Func::Randn => Value::S(self.ctx.rng.normal()),
            Func::Abs => map2(|a, _| a.abs(), args.remove(0), Value::S(0.0)),
            Func::Min => {
                let b = args.pop().unwrap();
                map2(f64::min, args.pop().unwrap(), b)
            }
            Func::Max => {
                let b = args.pop().unwrap();
                map2(f64::max, args.pop().unwrap(), b)
            }
            Func::Clamp => match args.remove(0) {
                Value::V(mut v) => {
                    for ((c, lo), hi) in v.iter_mut().zip(self.ctx.lower).zip(self.ctx.upper) {
                        *c = c.clamp(*lo, *hi);
                    }
                    Value::V(v)
                }
                Value::S(_) => unreachable!("clamp takes a vector after checking"),
            },
            Func::Bincross => {
                let (Value::V(a), Value::V(b), Value::S(cr)) = (args.remove(0), args.remove(0), args.remove(0)) else {
                    unreachable!("bincross signature checked");
                };
                Value::V(binomial_crossover(self.ctx.rng, &a, &b, cr))
            }
        }
    }
}

/// Binomial crossover: one index draw for `jrand`, then one uniform per
/// component. Component j comes from `donor` when `u_j < cr` or `j == jrand`.
pub fn binomial_crossover(rng: &mut RunRng, target: &[f64], donor: &[f64], cr: f64) -> Vec<f64> {
    let d = target.len();
    let jrand = rng.index(d);
    (0..d)
        .map(|j| {
            let u = rng.uniform();
            if u < cr || j == jrand {
                donor[j]
            } else {
                target[j]
            }
        })
        .collect()
}

/// Runs the rule for one target individual.
///
/// Draws the donor triplet first, then evaluates statements in order.
/// Non-finite output components are replaced by uniform draws in bounds.
pub fn interpret(rule: &RuleAst, ctx: &mut RuleContext<'_>) -> Interpretation {
    let donors = distinct_triplet(ctx.rng, ctx.members.len(), ctx.target);
    let mut m = Machine {
        ctx,
        donors,
        env: Vec::with_capacity(rule.params.len() + rule.statements.len()),
    };
    for p in &rule.params {
        m.env.push((p.name.as_str(), Value::S(p.value)));
    }
    for s in &rule.statements {
        let v = m.eval(&s.expr);
        m.env.push((s.target.as_str(), v));
    }
    let mut offspring = match m.env.pop() {
        Some((_, Value::V(v))) => v,
        _ => unreachable!("checked rules end with a vector `offspring`"),
    };
    let ctx = m.ctx;
    let mut resampled = 0;
    for ((c, lo), hi) in offspring.iter_mut().zip(ctx.lower).zip(ctx.upper) {
        if !c.is_finite() {
            *c = lo + ctx.rng.uniform() * (hi - lo);
            resampled += 1;
        }
    }
    Interpretation {
        offspring,
        resampled,
        donors,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{builtin_rule, parse};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn population() -> Vec<Individual> {
        [[0.1, 0.2], [0.9, 0.4], [0.5, 0.5], [0.3, 0.8]]
            .iter()
            .enumerate()
            .map(|(i, x)| Individual::with_scores(x.to_vec(), 0.0, i as f64))
            .collect()
    }

    fn run(rule: &RuleAst, members: &[Individual], target: usize, seed: u64, lo: f64, hi: f64) -> Interpretation {
        let mut rng = RunRng::seed_from_u64(seed);
        let d = members[0].dim();
        let (lower, upper) = (vec![lo; d], vec![hi; d]);
        let mean = crate::constraint::Population::new(members.to_vec()).centroid();
        let mut ctx = RuleContext {
            target,
            members,
            best: &members[0],
            mean: &mean,
            lower: &lower,
            upper: &upper,
            rng: &mut rng,
        };
        interpret(rule, &mut ctx)
    }

    #[test]
    fn identity_rule() {
        let pop = population();
        let out = run(&builtin_rule("no_op").unwrap(), &pop, 2, 1, 0.0, 1.0);
        assert_eq!(out.offspring, pop[2].x);
        assert_eq!(out.resampled, 0);
    }

    /// Hand-executed DE/rand/1/bin following the documented draw order,
    /// written directly against the raw ChaCha stream.
    #[test]
    fn de_matches_hand_trace() {
        let pop = population();
        let rule = builtin_rule("de_rand_1_bin").unwrap();
        for seed in 0..50u64 {
            for target in 0..4 {
                let out = run(&rule, &pop, target, seed, 0.0, 1.0);

                let mut raw = ChaCha8Rng::seed_from_u64(seed);
                let mut pick = |excl: &[usize]| loop {
                    let r: usize = raw.random_range(0..4);
                    if !excl.contains(&r) {
                        break r;
                    }
                };
                let r1 = pick(&[target]);
                let r2 = pick(&[target, r1]);
                let r3 = pick(&[target, r1, r2]);
                assert_eq!(out.donors, [r1, r2, r3]);
                let jrand: usize = raw.random_range(0..2);
                let mut expected = [0.0; 2];
                for j in 0..2 {
                    let v = (pop[r1].x[j] + 0.5 * (pop[r2].x[j] - pop[r3].x[j])).clamp(0.0, 1.0);
                    let u: f64 = raw.random();
                    expected[j] = if u < 0.9 || j == jrand { v } else { pop[target].x[j] };
                }
                assert_eq!(out.offspring, expected.to_vec(), "seed {seed} target {target}");
            }
        }
    }

    #[test]
    fn division_by_zero_is_resampled_in_bounds() {
        let pop = population();
        let rule = parse("offspring = clamp(x / 0);").unwrap();
        let mut zero = pop.clone();
        zero[1].x = vec![0.0, 0.7];
        for t in 0..4 {
            let out = run(&rule, &zero, t, 3, 0.0, 1.0);
            assert!(out.offspring.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        // 0/0 is NaN and survives clamp, so it is resampled
        let out = run(&rule, &zero, 1, 3, 0.0, 1.0);
        assert_eq!(out.resampled, 1);
    }

    #[test]
    fn scalar_builtins_refer_to_target() {
        let pop = population();
        let rule = parse("offspring = x * 0 + f + dim;").unwrap();
        let out = run(&rule, &pop, 3, 0, -10.0, 10.0);
        assert_eq!(out.offspring, vec![5.0, 5.0]);
        let rule = parse("offspring = mean;").unwrap();
        let out = run(&rule, &pop, 0, 0, -10.0, 10.0);
        assert!((out.offspring[0] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn rand_broadcasts_one_draw() {
        let pop = population();
        let rule = parse("offspring = x * 0 + rand();").unwrap();
        let out = run(&rule, &pop, 0, 9, 0.0, 1.0);
        assert_eq!(out.offspring[0], out.offspring[1]);
    }

    #[test]
    fn interpretation_is_deterministic() {
        let pop = population();
        let rule = parse("v = best + randn() * (r1 - r2) + rand() * mean; offspring = bincross(x, clamp(v), 0.3);").unwrap();
        for t in 0..4 {
            assert_eq!(run(&rule, &pop, t, 17, 0.0, 1.0), run(&rule, &pop, t, 17, 0.0, 1.0));
        }
    }
}
