mod common;

use giplab_core::lp::resample_zero_column;
use giplab_core::{solve_lp, BSpec, Instance, RngHandle};
use proptest::prelude::*;

#[test]
fn lp_matches_vertex_enumeration() {
    for seed in 0..30 {
        let b = if seed % 3 == 0 { BSpec::Gaussian } else { BSpec::Zeros };
        let inst = Instance::generate(3, 8, b, &mut RngHandle::new(seed, 0)).unwrap();
        match (solve_lp(&inst), common::vertex_lp(&inst)) {
            (Ok(sol), Some(v)) => assert!((sol.value - v).abs() <= 1e-9, "seed {seed}: {} vs {v}", sol.value),
            (Err(_), None) => {}
            (a, b) => panic!("seed {seed}: solver {:?} vs oracle {b:?}", a.map(|s| s.value)),
        }
    }
}

#[test]
fn file_round_trip_preserves_lp_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.txt");
    let inst = Instance::generate(3, 40, BSpec::Gaussian, &mut RngHandle::new(9, 0)).unwrap();
    inst.write_file(&path).unwrap();
    let back = Instance::read_file(&path).unwrap();
    assert_eq!(back, inst);
    let (a, b) = (solve_lp(&inst).unwrap(), solve_lp(&back).unwrap());
    assert!((a.value - b.value).abs() <= 1e-12);
}

#[test]
fn resampled_zero_column_keeps_the_optimum() {
    let mut kept = 0;
    let trials = 500;
    for trial in 0..trials {
        let inst = Instance::generate(2, 60, BSpec::Zeros, &mut RngHandle::new(trial, 0)).unwrap();
        let sol = solve_lp(&inst).unwrap();
        let mut rng = RngHandle::new(trial, 1);
        let i = sol.n0[rng.below(sol.n0.len())];
        let redrawn = resample_zero_column(&inst, &sol, i, &mut rng).unwrap();
        let again = solve_lp(&redrawn).unwrap();
        let others_same = (0..inst.n)
            .filter(|&j| j != i)
            .all(|j| (sol.x_star[j] - again.x_star[j]).abs() <= 1e-7);
        let value_same = (sol.value - again.value).abs() <= 1e-7;
        if others_same && value_same && again.n0.contains(&i) {
            kept += 1;
        }
    }
    assert!(kept as f64 >= 0.99 * trials as f64, "kept {kept}/{trials}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_satisfies_slackness_and_sign_structure(
        m in 1usize..6,
        n in 5usize..80,
        seed in 0u64..1_000_000,
        gaussian_b in any::<bool>(),
    ) {
        let b = if gaussian_b { BSpec::Gaussian } else { BSpec::Zeros };
        let inst = Instance::generate(m, n, b, &mut RngHandle::new(seed, 0)).unwrap();
        let Ok(sol) = solve_lp(&inst) else { return Ok(()) };
        prop_assert!(sol.s.len() <= m);
        prop_assert!(sol.u_star.iter().all(|u| *u >= 0.0));
        let atu = inst.a.tr_mul_vec(&sol.u_star);
        for i in 0..n {
            let red = inst.c[i] - atu[i];
            prop_assert!(sol.x_star[i] * (-red).max(0.0) <= 1e-7);
            prop_assert!((1.0 - sol.x_star[i]) * red.max(0.0) <= 1e-7);
        }
        let ax = inst.a.mul_vec(&sol.x_star);
        for j in 0..m {
            prop_assert!(sol.u_star[j] * (inst.b[j] - ax[j]) <= 1e-7);
        }
        for &i in &sol.n0 {
            prop_assert!(sol.reduced_costs[i] <= 1e-9);
        }
        prop_assert!(inst.max_violation(&sol.x_star) <= 1e-9);
    }
}
