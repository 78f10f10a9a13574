//! Reference evaluator for the CEC2010 constrained suite.
//!
//! Deliberately written as a second, independent transcription of the
//! technical report with explicit index loops and no code shared with
//! [`super::cec2010`]. Only the shift and rotation data are shared.
//! Used by the `oracle-check` command and the test suites.

#![allow(clippy::needless_range_loop)]

/// Reference values `(f, g, h)` for problem `number` (1..=18).
pub fn reference_evaluate(
    number: u8,
    x: &[f64],
    o: &[f64],
    m: Option<&[Vec<f64>]>,
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = x.len();
    let nf = n as f64;
    let pi = std::f64::consts::PI;

    let mut zs = vec![0.0; n];
    for i in 0..n {
        zs[i] = x[i] - o[i];
    }
    let rot = |v: &[f64]| -> Vec<f64> {
        match m {
            None => v.to_vec(),
            Some(mat) => {
                let mut r = vec![0.0; n];
                for j in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += v[i] * mat[i][j];
                    }
                    r[j] = acc;
                }
                r
            }
        }
    };
    let rosen = |v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n - 1 {
            let a = v[i] * v[i] - v[i + 1];
            s += 100.0 * a * a + (v[i] - 1.0) * (v[i] - 1.0);
        }
        s
    };
    let zmax = |v: &[f64]| -> f64 {
        let mut best = v[0];
        for i in 1..n {
            if v[i] > best {
                best = v[i];
            }
        }
        best
    };

    match number {
        1 => {
            let z = &zs;
            let mut a = 0.0;
            let mut b = 1.0;
            let mut c = 0.0;
            let mut prod = 1.0;
            let mut sum = 0.0;
            for i in 0..n {
                let cz = z[i].cos();
                a += cz * cz * cz * cz;
                b *= cz * cz;
                c += (i as f64 + 1.0) * z[i] * z[i];
                prod *= z[i];
                sum += z[i];
            }
            let f = -((a - 2.0 * b) / c.sqrt()).abs();
            (f, vec![0.75 - prod, sum - 7.5 * nf], vec![])
        }
        2 => {
            let z = &zs;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for i in 0..n {
                s1 += z[i] * z[i] - 10.0 * (2.0 * pi * z[i]).cos() + 10.0;
                let y = z[i] - 0.5;
                s2 += y * y - 10.0 * (2.0 * pi * y).cos() + 10.0;
            }
            (zmax(z), vec![10.0 - s1 / nf, s1 / nf - 15.0], vec![s2 / nf - 20.0])
        }
        3 => {
            let z = &zs;
            let mut h = 0.0;
            for i in 0..n - 1 {
                h += (z[i] - z[i + 1]) * (z[i] - z[i + 1]);
            }
            (rosen(z), vec![], vec![h])
        }
        4 => {
            let z = &zs;
            let mut h1 = 0.0;
            for i in 0..n {
                h1 += z[i] * z[i].abs().sqrt().cos();
            }
            h1 /= nf;
            // 1-based i = 1..D/2-1
            let mut h2 = 0.0;
            for i in 1..n / 2 {
                let d = z[i - 1] - z[i];
                h2 += d * d;
            }
            // 1-based i = D/2+1..D-1
            let mut h3 = 0.0;
            for i in n / 2 + 1..n {
                let d = z[i - 1] * z[i - 1] - z[i];
                h3 += d * d;
            }
            let mut h4 = 0.0;
            for i in 0..n {
                h4 += z[i];
            }
            (zmax(z), vec![], vec![h1, h2, h3, h4])
        }
        5 | 6 => {
            let y: Vec<f64> = if number == 5 {
                zs.clone()
            } else {
                let c = 483.6106156535;
                let mut t = vec![0.0; n];
                for i in 0..n {
                    t[i] = x[i] + c - o[i];
                }
                let mut r = rot(&t);
                for v in r.iter_mut() {
                    *v -= c;
                }
                r
            };
            let mut h1 = 0.0;
            let mut h2 = 0.0;
            for i in 0..n {
                let s = y[i].abs().sqrt();
                h1 += -y[i] * s.sin();
                h2 += -y[i] * (0.5 * s).cos();
            }
            (zmax(&zs), vec![], vec![h1 / nf, h2 / nf])
        }
        7 | 8 => {
            let mut z = vec![0.0; n];
            for i in 0..n {
                z[i] = zs[i] + 1.0;
            }
            let y = rot(&zs);
            let mut sq = 0.0;
            let mut cs = 0.0;
            for i in 0..n {
                sq += y[i] * y[i];
                cs += (0.1 * y[i]).cos();
            }
            let g = 0.5 - (-0.1 * (sq / nf).sqrt()).exp() - 3.0 * (cs / nf).exp() + std::f64::consts::E;
            (rosen(&z), vec![g], vec![])
        }
        9 | 10 => {
            let mut z = vec![0.0; n];
            for i in 0..n {
                z[i] = zs[i] + 1.0;
            }
            let y = rot(&zs);
            let mut h = 0.0;
            for i in 0..n {
                h += y[i] * y[i].abs().sqrt().sin();
            }
            (rosen(&z), vec![], vec![h])
        }
        11 => {
            let z = &zs;
            let mut f = 0.0;
            for i in 0..n {
                f += -z[i] * (2.0 * z[i].abs().sqrt()).cos();
            }
            let mut t = vec![0.0; n];
            for i in 0..n {
                t[i] = zs[i] + 1.0;
            }
            let y = rot(&t);
            (f / nf, vec![], vec![rosen(&y)])
        }
        12 => {
            let z = &zs;
            let mut f = 0.0;
            let mut g = 0.0;
            for i in 0..n {
                f += z[i] * z[i].abs().sqrt().sin();
                g += z[i] - 100.0 * (0.1 * z[i]).cos() + 10.0;
            }
            let mut h = 0.0;
            for i in 0..n - 1 {
                let d = z[i] * z[i] - z[i + 1];
                h += d * d;
            }
            (f, vec![g], vec![h])
        }
        13 => {
            let z = &zs;
            let mut f = 0.0;
            let mut sq = 0.0;
            let mut sn = 0.0;
            let mut pc = 1.0;
            for i in 0..n {
                f += -z[i] * z[i].abs().sqrt().sin();
                sq += z[i] * z[i];
                sn += (pi * z[i] / 50.0).sin();
                pc *= (z[i] / ((i + 1) as f64).sqrt()).cos();
            }
            let g1 = -50.0 + sq / (100.0 * nf);
            let g2 = 50.0 * sn / nf;
            let g3 = 75.0 - 50.0 * (sq / 4000.0 - pc + 1.0);
            (f / nf, vec![g1, g2, g3], vec![])
        }
        14 | 15 => {
            let mut z = vec![0.0; n];
            for i in 0..n {
                z[i] = zs[i] + 1.0;
            }
            let y = rot(&zs);
            let mut g1 = 0.0;
            let mut g2 = 0.0;
            let mut g3 = 0.0;
            for i in 0..n {
                let s = y[i].abs().sqrt();
                g1 += -y[i] * s.cos();
                g2 += y[i] * s.cos();
                g3 += y[i] * s.sin();
            }
            (rosen(&z), vec![g1 - nf, g2 - nf, g3 - 10.0 * nf], vec![])
        }
        16 => {
            let z = &zs;
            let mut sq = 0.0;
            let mut pc = 1.0;
            let mut g1 = 0.0;
            let mut g2 = 1.0;
            let mut h1 = 0.0;
            let mut h2 = 0.0;
            for i in 0..n {
                sq += z[i] * z[i];
                pc *= (z[i] / ((i + 1) as f64).sqrt()).cos();
                g1 += z[i] * z[i] - 100.0 * (pi * z[i]).cos() + 10.0;
                g2 *= z[i];
                h1 += z[i] * z[i].abs().sqrt().sin();
                h2 += -z[i] * z[i].abs().sqrt().sin();
            }
            (sq / 4000.0 - pc + 1.0, vec![g1, g2], vec![h1, h2])
        }
        17 | 18 => {
            let z = &zs;
            let mut f = 0.0;
            for i in 0..n - 1 {
                f += (z[i] - z[i + 1]) * (z[i] - z[i + 1]);
            }
            if number == 17 {
                let mut g1 = 1.0;
                let mut g2 = 0.0;
                let mut h = 0.0;
                for i in 0..n {
                    g1 *= z[i];
                    g2 += z[i];
                    h += z[i] * (4.0 * z[i].abs().sqrt()).sin();
                }
                (f, vec![g1, g2], vec![h])
            } else {
                let mut s = 0.0;
                for i in 0..n {
                    s += z[i] * z[i].abs().sqrt().sin();
                }
                (f, vec![-s / nf], vec![s / nf])
            }
        }
        _ => panic!("CEC2010 problem number out of range: {number}"),
    }
}

/// Relative error `|a - b| / max(1, |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        return 0.0;
    }
    if a.is_nan() || b.is_nan() {
        return f64::INFINITY;
    }
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest relative error between `problem` and the reference evaluator over
/// `points` seeded uniform points, taken across f and every constraint.
pub fn max_deviation(problem: &super::Cec2010Problem, points: usize, seed: u64) -> f64 {
    use super::Problem;
    let data = problem.data();
    let m = data.rotations.first().map(|m| m.as_slice());
    let mut rng = crate::rng::RunRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = problem.spec().sample_uniform(&mut rng);
        let got = problem.evaluate_unchecked(&x);
        let (f, g, h) = reference_evaluate(problem.function().number(), &x, &data.shift, m);
        assert_eq!((got.g.len(), got.h.len()), (g.len(), h.len()), "constraint counts differ");
        worst = worst.max(relative_error(got.f, f));
        for (a, b) in got.g.iter().zip(&g).chain(got.h.iter().zip(&h)) {
            worst = worst.max(relative_error(*a, *b));
        }
    }
    worst
}
