use metaevolve::problems::data::{rotation_file, shift_file, synthetic_problem_data, write_matrix, write_vector};
use metaevolve::problems::oracle::{max_deviation, reference_evaluate, relative_error};
use metaevolve::problems::{
    estimate_feasibility_ratio, evaluate, synthesize_training_cop, BudgetedEvaluator, Cec2010Function, Cec2010Problem,
    DataSource, Problem, ProblemData, SphereRing,
};
use metaevolve::rng::RunRng;

#[test]
fn every_instance_matches_reference_evaluator() {
    for func in Cec2010Function::all() {
        let p = Cec2010Problem::load(func, 10, None, false).unwrap();
        let dev = max_deviation(&p, 100, 7);
        assert!(dev <= 1e-8, "{}: {dev:e}", func.id());
    }
}

#[test]
fn c01_seeded_point_and_c07_at_shift() {
    let p = Cec2010Problem::load(Cec2010Function::new(1).unwrap(), 10, None, false).unwrap();
    let mut rng = RunRng::seed_from_u64(42);
    let x = p.spec().sample_uniform(&mut rng);
    let got = evaluate(&p, &x).unwrap();
    let (f, g, _) = reference_evaluate(1, &x, &p.data().shift, None);
    assert!(relative_error(got.f, f) <= 1e-8);
    assert!(got.g.iter().zip(&g).all(|(a, b)| relative_error(*a, *b) <= 1e-8));

    let p = Cec2010Problem::load(Cec2010Function::new(7).unwrap(), 10, None, false).unwrap();
    let o = p.data().shift;
    let got = evaluate(&p, &o).unwrap();
    let (_, g, _) = reference_evaluate(7, &o, &o, None);
    assert!(got.g.iter().zip(&g).all(|(a, b)| relative_error(*a, *b) <= 1e-8));
}

#[test]
fn shifted_equals_unshifted_at_offset_point() {
    let mut rng = RunRng::seed_from_u64(3);
    for func in Cec2010Function::all().filter(|f| f.manifest_entry().rotations == 0) {
        let spec = func.spec(10);
        let shifted = Cec2010Problem::load(func, 10, None, false).unwrap();
        let data = shifted.data();
        let plain = Cec2010Problem::with_data(
            func,
            10,
            ProblemData {
                shift: vec![0.0; 10],
                ..data.clone()
            },
        )
        .unwrap();
        for _ in 0..20 {
            let x = spec.sample_uniform(&mut rng);
            let z: Vec<f64> = x.iter().zip(&data.shift).map(|(a, b)| a - b).collect();
            let (a, b) = (shifted.evaluate_unchecked(&x), plain.evaluate_unchecked(&z));
            assert!(relative_error(a.f, b.f) <= 1e-12, "{}", func.id());
            for (u, v) in a.g.iter().chain(&a.h).zip(b.g.iter().chain(&b.h)) {
                assert!(relative_error(*u, *v) <= 1e-12, "{}", func.id());
            }
        }
    }
}

#[test]
fn official_files_are_preferred_over_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let func = Cec2010Function::all().find(|f| f.manifest_entry().rotations > 0).unwrap();
    let spec = func.spec(10);
    let data = synthetic_problem_data(99, &spec.lower, &spec.upper, 1);
    write_vector(&shift_file(dir.path(), &spec.id, 10), &data.shift).unwrap();
    write_matrix(&rotation_file(dir.path(), &spec.id, 10, 1), &data.rotations[0]).unwrap();

    let loaded = Cec2010Problem::load(func, 10, Some(dir.path()), true).unwrap();
    assert_eq!(loaded.data_source(), Some(DataSource::OfficialFile));
    let expected = Cec2010Problem::with_data(func, 10, data).unwrap();
    let mut rng = RunRng::seed_from_u64(5);
    for _ in 0..10 {
        let x = spec.sample_uniform(&mut rng);
        let (a, b) = (loaded.evaluate_unchecked(&x), expected.evaluate_unchecked(&x));
        assert!(relative_error(a.f, b.f) <= 1e-12);
    }
    // strict mode refuses to fall back
    let other = Cec2010Function::all().find(|f| *f != func).unwrap();
    assert!(Cec2010Problem::load(other, 10, Some(dir.path()), true).is_err());
}

#[test]
fn evaluation_is_pure_and_billed() {
    let p = SphereRing::new(4);
    let mut eval = BudgetedEvaluator::new(&p, 10);
    let a = eval.evaluate(vec![0.5; 4]).unwrap();
    let b = eval.evaluate(vec![0.5; 4]).unwrap();
    assert_eq!(a, b);
    assert_eq!(eval.budget().used, 2);
}

#[test]
fn synthetic_feasibility_target_is_respected() {
    let tight = synthesize_training_cop(3, 10, 2, 0, 0.1).unwrap();
    let ratio = estimate_feasibility_ratio(&tight, 10_000, 11);
    assert!((0.0..=0.25).contains(&ratio), "{ratio}");
    let loose = synthesize_training_cop(1, 5, 1, 0, 1.0).unwrap();
    assert_eq!(estimate_feasibility_ratio(&loose, 10_000, 11), 1.0);
    let again = synthesize_training_cop(7, 10, 2, 1, 0.3).unwrap();
    assert_eq!(
        format!("{:?}", synthesize_training_cop(7, 10, 2, 1, 0.3).unwrap()),
        format!("{again:?}")
    );
}
