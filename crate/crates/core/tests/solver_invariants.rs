use mofista::diagnostics::{
    first_energy_check, lyapunov_monotone_check, monotone_cap_check, one_step_bound_check, t_bounds_check,
    t_growth_check, t_identity_check, theta_ratio_check,
};
use mofista::solver::accepted_l_bound_check;
use mofista::{run_solver, Nonsmooth, Problem, Quadratic, QuadraticObjective, SolverConfig, Variant};
use proptest::prelude::*;

/// Convex quadratic `½xᵀ(AAᵀ + δI)x + bᵀx` per objective, with an ℓ1 weight (0 for none).
fn arb_instance() -> impl Strategy<Value = (Vec<QuadraticObjective>, f64, Vec<f64>, Vec<f64>)> {
    (1usize..=3, 1usize..=3, 0usize..2).prop_flat_map(|(n, m, g)| {
        let factor = prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n * n), m);
        let linear = prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), m);
        let x0 = prop::collection::vec(-4.0f64..4.0, n);
        let z = prop::collection::vec(-4.0f64..4.0, n);
        (factor, linear, x0, z, 0.1f64..1.5).prop_map(move |(factor, linear, x0, z, w)| {
            let objectives = factor
                .iter()
                .zip(linear)
                .map(|(a, b)| {
                    let hessian = (0..n)
                        .map(|r| {
                            (0..n)
                                .map(|c| (0..n).map(|k| a[r * n + k] * a[c * n + k]).sum::<f64>() + if r == c { 0.05 } else { 0.0 })
                                .collect()
                        })
                        .collect();
                    QuadraticObjective { hessian, linear: b, constant: 0.0 }
                })
                .collect();
            (objectives, if g == 0 { 0.0 } else { w }, x0, z)
        })
    })
}

fn build(objectives: &[QuadraticObjective], w: f64) -> (Problem, f64) {
    let q = Quadratic::new(objectives.to_vec()).unwrap();
    let l = q.lipschitz();
    let g = if w > 0.0 { Nonsmooth::WeightedL1(w) } else { Nonsmooth::Zero };
    (q.into_problem(g).unwrap(), l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backtracking_trace_invariants((objectives, w, x0, z) in arb_instance(), l_init in 0.05f64..80.0) {
        let (p, l) = build(&objectives, w);
        let cfg = SolverConfig { l_init, max_iter: 300, ..Default::default() }.with_eps(1e-6);
        let trace = run_solver(&p, &x0, &cfg).unwrap();
        prop_assert!(trace.status.is_success(), "{:?}", trace.message);
        prop_assert!(monotone_cap_check(&trace));
        prop_assert!(t_identity_check(&trace));
        prop_assert!(t_bounds_check(&trace));
        prop_assert!(theta_ratio_check(&trace));
        prop_assert!(accepted_l_bound_check(&trace, l, &cfg));
        prop_assert!(one_step_bound_check(&trace, &p, &z).unwrap());
        prop_assert!(lyapunov_monotone_check(&trace, &p, &z).unwrap());
        prop_assert!(first_energy_check(&trace, &p, &z).unwrap());
        if l_init <= cfg.beta * l {
            prop_assert!(t_growth_check(&trace, l, cfg.beta));
        }
    }

    #[test]
    fn constant_step_variants_keep_objectives_capped((objectives, w, x0, _z) in arb_instance(), factor in 1.0f64..20.0) {
        let (p, l) = build(&objectives, w);
        for variant in [Variant::FixedStep { lipschitz: factor * l }, Variant::PlainProxGrad { lipschitz: factor * l }] {
            let cfg = SolverConfig { max_iter: 300, ..Default::default() }.with_variant(variant);
            let trace = run_solver(&p, &x0, &cfg).unwrap();
            prop_assert!(trace.status.is_success(), "{:?}", trace.message);
            prop_assert!(monotone_cap_check(&trace));
            prop_assert!(trace.records.iter().all(|r| r.backtracks == 0 && r.lipschitz == factor * l));
        }
    }

    #[test]
    fn runs_are_reproducible((objectives, w, x0, _z) in arb_instance()) {
        let (p, _) = build(&objectives, w);
        let cfg = SolverConfig::default();
        let a = run_solver(&p, &x0, &cfg).unwrap();
        let b = run_solver(&p, &x0, &cfg).unwrap();
        prop_assert_eq!(a.iterates(), b.iterates());
        prop_assert_eq!(a.status, b.status);
    }
}
