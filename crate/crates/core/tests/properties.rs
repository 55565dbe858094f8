use ecf::baselines::mrc_sum_rate;
use ecf::coeff::*;
use ecf::power::*;
use ecf::rate::*;
use ecf::successive::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn cvec(l: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b)| Complex64::new(a, b)), l)
}

fn simplex(l: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, l).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_round_trips(g in prop::collection::vec(-10.0f64..10.0, 1..8)) {
        let (s, sorted) = normalize_channel(&g);
        prop_assert!(sorted.iter().all(|&x| x >= 0.0));
        prop_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(s.invert(&sorted), g);
    }

    #[test]
    fn selection_objective_invariant_under_signed_permutation(
        (p, g, perm, flips) in (2usize..5).prop_flat_map(|l| (
            prop::collection::vec(0.1f64..50.0, l),
            prop::collection::vec(-4.0f64..4.0, l),
            Just((0..l).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(any::<bool>(), l),
        ))
    ) {
        let a = select_real_coeff(&p, &g).unwrap();
        let p2: Vec<f64> = perm.iter().map(|&j| p[j]).collect();
        let g2: Vec<f64> = perm.iter().map(|&j| if flips[j] { -g[j] } else { g[j] }).collect();
        let b = select_real_coeff(&p2, &g2).unwrap();
        let (oa, ob) = (real_objective(&p, &g, &a), real_objective(&p2, &g2, &b));
        prop_assert!((oa - ob).abs() <= 1e-9 * oa.max(ob).max(1e-12), "{} vs {}", oa, ob);
    }

    #[test]
    fn selected_vectors_are_nonzero((p, g) in (1usize..7).prop_flat_map(|l| (simplex(l), cvec(l)))) {
        prop_assert!(!select_coeff_complex(&p, &g).unwrap().is_zero());
        let re: Vec<f64> = g.iter().map(|z| z.re).collect();
        prop_assert!(select_real_coeff(&p, &re).unwrap().iter().any(|&x| x != 0));
    }

    #[test]
    fn bound_is_monotone_in_power(
        (p, g, idx, extra) in (1usize..6).prop_flat_map(|l| (
            prop::collection::vec(0.0f64..20.0, l),
            prop::collection::vec(-3.0f64..3.0, l),
            0..l,
            0.0f64..20.0,
        ))
    ) {
        let mut q = p.clone();
        q[idx] += extra;
        prop_assert!(candidate_bound(&q, &g) >= candidate_bound(&p, &g));
    }

    #[test]
    fn projection_lands_on_simplex(y in prop::collection::vec(-3.0f64..3.0, 1..9), total in 0.1f64..5.0) {
        let p = project_simplex(&y, total);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - total).abs() <= 1e-9 * total);
        let again = project_simplex(&p, total);
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12 * total);
        }
    }

    #[test]
    fn mrc_ignores_common_phase_of_a_column(
        (g, p, ue, phase) in (1usize..4).prop_flat_map(|l| (
            prop::collection::vec(cvec(l), l + 1..3 * l + 2),
            simplex(l),
            0..l,
            0.0f64..std::f64::consts::TAU,
        ))
    ) {
        let alloc = PowerAllocation::new(p, 1.0).unwrap();
        let base = mrc_sum_rate(&g, &alloc);
        let rot = Complex64::from_polar(1.0, phase);
        let g2: Vec<Vec<Complex64>> = g
            .iter()
            .map(|row| row.iter().enumerate().map(|(k, &x)| if k == ue { x * rot } else { x }).collect())
            .collect();
        let turned = mrc_sum_rate(&g2, &alloc);
        for (a, b) in base.per_ue_rates.iter().zip(&turned.per_ue_rates) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn assignment_strategies_and_modes_are_ordered(
        (rows, g, p) in (2usize..5).prop_flat_map(|l| (
            prop::collection::vec(prop::collection::vec(-1i64..=1, l), l),
            prop::collection::vec(cvec(l), l),
            simplex(l),
        ))
    ) {
        let a: Vec<_> = rows.into_iter().map(GaussianIntegerVector::from_real).collect();
        prop_assume!(ecf::selection::coefficient_rank(&a) == a.len());
        let alloc = PowerAllocation::new(p, 1.0).unwrap();
        let plan = order_combinations_with_power(&a, &g, &alloc).unwrap();
        for (m, row) in plan.rows.iter().enumerate() {
            let para = effective_noise_parallel(&alloc.p, &g[plan.order[m]], row);
            prop_assert!(plan.step_noises[m] <= para * (1.0 + 1e-9) + 1e-15);
        }
        let sum = |s| succ_rates(&plan, &assign_ues(&plan, s, &g), SuccMode::Literal).sum_rate;
        let best = sum(UeOrder::Hungarian);
        prop_assert!(best + 1e-9 >= sum(UeOrder::ReceivedPower));
        prop_assert!(best + 1e-9 >= sum(UeOrder::ChannelNorm));
        for s in [UeOrder::ReceivedPower, UeOrder::ChannelNorm, UeOrder::Hungarian] {
            let asg = assign_ues(&plan, s, &g);
            let lit = succ_rates(&plan, &asg, SuccMode::Literal);
            let con = succ_rates(&plan, &asg, SuccMode::Conservative);
            for (x, y) in con.per_ue_rates.iter().zip(&lit.per_ue_rates) {
                prop_assert!(x <= y);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parallel_power_dominates_equal_split(
        (a, g) in (2usize..4).prop_flat_map(|l| (
            prop::collection::vec(prop::collection::vec(0i64..=1, l), l),
            prop::collection::vec(cvec(l), l),
        )),
        seed in any::<u64>(),
    ) {
        let a: Vec<_> = a.into_iter().map(GaussianIntegerVector::from_real).collect();
        prop_assume!(a.iter().all(|r| !r.is_zero()));
        let l = a[0].len();
        let budget = SolverBudget { starts: 4, iterations: 20, refine: 4, seed };
        let res = optimize_parallel_default(&a, &g, 1.0, &budget).unwrap();
        prop_assert!(res.allocation.is_valid());
        let used = used_users(&a, l);
        let eq = PowerAllocation::equal_over(&used, 1.0);
        prop_assert!(res.t <= max_parallel_noise(&eq.p, &a, &g) + 1e-6);
        prop_assert!((max_parallel_noise(&res.allocation.p, &a, &g) - res.t).abs() <= 1e-6);
    }
}
