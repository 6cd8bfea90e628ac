mod common;

use common::*;
use pingtsvm::pingtsvm::train;
use pingtsvm::qp::solve_qp;
use pingtsvm::{KernelSpec, Params, QpStatus, Settings};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn qp_matches_enumeration(seed in any::<u64>(), n in 1usize..6, m in 0usize..9) {
        let prob = random_strict_qp(&mut rng(seed), n, m);
        let sol = solve_qp(&prob, &Settings::default()).unwrap();
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        let (x, obj) = enumerate_active_sets(&prob).unwrap();
        prop_assert!((sol.objective - obj).abs() <= 1e-6 * (1.0 + obj.abs()));
        for (a, b) in sol.x.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-5, "{} vs {}", a, b);
        }
    }

    #[test]
    fn zero_tau_surfaces_match_hinge_twin(seed in any::<u64>(), n_pos in 5usize..12, c in 0.1f64..4.0) {
        let mut r = rng(seed);
        let ds = random_clouds(&mut r, n_pos, 16 - n_pos);
        let model = train(&ds, &Params::new(c, 0.0, KernelSpec::linear()), &Settings::default()).unwrap();
        let oracle = HingeTwsvm::fit(&ds, c);
        for i in 0..ds.n() {
            let x = ds.row(i);
            let v = model.decision_values(x).unwrap();
            let f1 = x[0] * oracle.w1[0] + x[1] * oracle.w1[1] + oracle.b1;
            let f2 = x[0] * oracle.w2[0] + x[1] * oracle.w2[1] + oracle.b2;
            prop_assert!((v.f1 - f1).abs() <= 1e-5 * (1.0 + f1.abs()), "f1 {} vs {}", v.f1, f1);
            prop_assert!((v.f2 - f2).abs() <= 1e-5 * (1.0 + f2.abs()), "f2 {} vs {}", v.f2, f2);
        }
    }

    #[test]
    fn trained_objective_never_beaten_by_perturbation(seed in any::<u64>(), tau in 0.0f64..1.0, c in 0.1f64..4.0) {
        let mut r = rng(seed);
        let ds = random_2d(&mut r, 4, 5);
        let model = train(&ds, &Params::new(c, tau, KernelSpec::linear()).with_ridge(0.0), &Settings::default()).unwrap();
        for (first, u, b) in [(true, &model.u1, model.b1), (false, &model.u2, model.b2)] {
            let (own, other, sign) = surface_rows(&ds, first);
            let w = weights(&model.support, u);
            let best = weight_objective(&own, &other, sign, c, tau, w, b);
            for d in [[1e-3, 0.0, 0.0], [0.0, 1e-3, 0.0], [0.0, 0.0, 1e-3], [-1e-3, 0.0, 0.0], [0.0, -1e-3, 0.0], [0.0, 0.0, -1e-3]] {
                let moved = weight_objective(&own, &other, sign, c, tau, [w[0] + d[0], w[1] + d[1]], b + d[2]);
                prop_assert!(best <= moved + 1e-9, "{} > {}", best, moved);
            }
        }
    }
}
