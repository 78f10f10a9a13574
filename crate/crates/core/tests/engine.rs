use metaevolve::constraint::{feasibility_order, Individual, Population};
use metaevolve::engine::{
    log_path, run, run_baseline_de, run_baseline_ga, run_baseline_lshade, run_observed, Algorithm, GaParams, RunConfig,
    RunLog,
};
use metaevolve::problems::{resolve, SphereRing};
use metaevolve::ruledsl::builtin_rule;

fn rule(name: &str) -> Algorithm {
    Algorithm::rule(name, builtin_rule(name).unwrap())
}

fn members_sorted(pop: &Population) -> Vec<Vec<u64>> {
    let mut xs: Vec<Vec<u64>> = pop
        .members
        .iter()
        .map(|m| m.x.iter().map(|v| v.to_bits()).collect())
        .collect();
    xs.sort();
    xs
}

#[test]
fn budget_accounting_counts_initialization() {
    let p = SphereRing::new(5);
    for max_fe in [200, 249] {
        let log = run(&p, &RunConfig::new(rule("de_rand_1_bin"), 50, max_fe, 3)).unwrap();
        assert_eq!(log.summary.generations, 3);
        assert_eq!(log.summary.fe_used, 200);
        let fes: Vec<u64> = log.entries.iter().map(|e| e.fe).collect();
        assert_eq!(fes, vec![50, 100, 150, 200]);
    }
}

#[test]
fn too_small_budget_gives_initialization_only_log() {
    let p = SphereRing::new(5);
    let log = run(&p, &RunConfig::new(rule("de_rand_1_bin"), 50, 99, 3)).unwrap();
    assert_eq!(log.summary.generations, 0);
    assert_eq!(log.summary.fe_used, 50);
    assert!(log.summary.events.iter().any(|e| e.starts_with("warning")));
    assert!(run(&p, &RunConfig::new(rule("de_rand_1_bin"), 50, 49, 3)).is_err());
    assert!(run(&p, &RunConfig::new(rule("de_rand_1_bin"), 3, 1000, 3)).is_err());
}

#[test]
fn no_op_keeps_initial_population() {
    for id in ["sphere-ring", "C01", "C03"] {
        let p = resolve(id, 10, None, false).unwrap();
        let mut seen = Vec::new();
        run_observed(&*p, &RunConfig::new(rule("no_op"), 20, 2000, 8), &mut |pop| seen.push(members_sorted(pop)))
            .unwrap();
        assert!(seen.len() > 10);
        assert!(seen.iter().all(|s| *s == seen[0]), "{id}");
    }
}

#[test]
fn ga_with_zero_rates_is_static() {
    let p = resolve("C01", 10, None, false).unwrap();
    let params = GaParams {
        crossover_rate: 0.0,
        mutation_rate: Some(0.0),
        ..GaParams::default()
    };
    let mut seen = Vec::new();
    run_observed(&*p, &RunConfig::new(Algorithm::Ga(params), 20, 2000, 2), &mut |pop| {
        seen.push(members_sorted(pop))
    })
    .unwrap();
    assert!(seen.iter().all(|s| *s == seen[0]));
}

#[test]
fn sphere_ring_regression() {
    let p = SphereRing::new(10);
    let log = run(&p, &RunConfig::new(rule("de_rand_1_bin"), 50, 20_000, 1)).unwrap();
    let initial = log.entries[0].best_f.unwrap();
    let best = log.best_feasible_f().unwrap();
    assert!(best <= 1e-3 * initial);
    assert_eq!(best, 1.0000537561401888);
}

fn same_trajectory(a: &RunLog, b: &RunLog) -> bool {
    let (mut a, mut b) = (a.without_timing(), b.without_timing());
    a.summary.algorithm.clear();
    b.summary.algorithm.clear();
    a == b
}

#[test]
fn dsl_de_matches_native_de() {
    let p = SphereRing::new(10);
    for seed in [1, 2, 99] {
        let cfg = RunConfig::new(rule("de_rand_1_bin"), 50, 50 * 101, seed);
        let mut dsl = Vec::new();
        let mut native = Vec::new();
        let a = run_observed(&p, &cfg, &mut |pop| dsl.push(pop.clone())).unwrap();
        let native_cfg = RunConfig {
            algorithm: Algorithm::de(),
            ..cfg.clone()
        };
        let b = run_observed(&p, &native_cfg, &mut |pop| native.push(pop.clone())).unwrap();
        assert_eq!(a.summary.generations, 100);
        assert_eq!(dsl, native);
        assert!(same_trajectory(&a, &b));
        assert!(same_trajectory(&a, &run_baseline_de(&p, &cfg).unwrap()));
    }
}

#[test]
fn elitism_and_increasing_fe() {
    for id in ["C01", "C02", "C12", "sphere-ring"] {
        let p = resolve(id, 10, None, false).unwrap();
        let cfg = RunConfig::new(rule("de_best_1_bin"), 30, 6000, 5);
        for log in [
            run(&*p, &cfg).unwrap(),
            run_baseline_lshade(&*p, &cfg).unwrap(),
            run_baseline_ga(&*p, &cfg).unwrap(),
        ] {
            for w in log.entries.windows(2) {
                assert!(w[1].fe > w[0].fe);
                assert!(w[1].best_cv <= w[0].best_cv, "{id}");
                if let (Some(before), Some(after)) = (w[0].best_f, w[1].best_f) {
                    let a = Individual::with_scores(vec![], w[0].best_cv, before);
                    let b = Individual::with_scores(vec![], w[1].best_cv, after);
                    assert_ne!(feasibility_order(&b, &a), std::cmp::Ordering::Greater, "{id}");
                }
            }
        }
    }
}

#[test]
fn offspring_stay_in_bounds() {
    let p = resolve("C02", 10, None, false).unwrap();
    let spec = p.spec().clone();
    for alg in [Algorithm::Ga(GaParams::default()), rule("uniform_random"), Algorithm::de()] {
        run_observed(&*p, &RunConfig::new(alg, 20, 3000, 4), &mut |pop| {
            assert!(pop.members.iter().all(|m| spec.contains(&m.x)));
        })
        .unwrap();
    }
}

#[test]
fn runs_are_deterministic() {
    let p = resolve("C05", 10, None, false).unwrap();
    for alg in [rule("de_current_to_best_1_bin"), Algorithm::de(), Algorithm::Ga(GaParams::default())] {
        let cfg = RunConfig::new(alg, 25, 5000, 77);
        assert_eq!(run(&*p, &cfg).unwrap().without_timing(), run(&*p, &cfg).unwrap().without_timing());
    }
    let cfg = RunConfig::new(Algorithm::de(), 25, 5000, 77);
    assert_eq!(
        run_baseline_lshade(&*p, &cfg).unwrap().without_timing(),
        run_baseline_lshade(&*p, &cfg).unwrap().without_timing()
    );
}

#[test]
fn lshade_ends_with_four_members() {
    let p = resolve("C01", 10, None, false).unwrap();
    let log = run_baseline_lshade(&*p, &RunConfig::new(Algorithm::de(), 180, 20_000, 1)).unwrap();
    assert_eq!(log.summary.final_population, 4);
    let sizes: Vec<usize> = log.entries.iter().map(|e| e.population).collect();
    assert!(sizes.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(sizes[0], 180);
}

#[test]
fn jsonl_round_trip() {
    let p = resolve("C04", 10, None, false).unwrap();
    let mut cfg = RunConfig::new(Algorithm::de(), 20, 3000, 12);
    cfg.log_every = 7;
    let log = run(&*p, &cfg).unwrap();
    assert_eq!(log.entries.last().unwrap().generation, log.summary.generations);
    let inner = &log.entries[1..log.entries.len() - 1];
    assert!(inner.iter().all(|e| e.generation % 7 == 0));
    let dir = tempfile::tempdir().unwrap();
    let path = log_path(dir.path(), "de", "C04", 12);
    log.write(&path).unwrap();
    assert!(path.ends_with("runs/de/C04/12.jsonl"));
    assert_eq!(RunLog::read(&path).unwrap(), log);
    assert_eq!(log.summary.data_source.as_deref(), Some("synthetic-seeded"));
}
