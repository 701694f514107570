mod oracle;

use num_traits::{Signed, Zero};
use proptest::prelude::*;
use wmms_core::algorithms::{check_restriction, restricted_greedy, round_robin};
use wmms_core::lp::{build_support_graph, round_assignment, solve_lp, LpMethod};
use wmms_core::model::fairness_score;
use wmms_core::num::{int, ratio};
use wmms_core::solver::{
    best_achievable_min_ratio, share_vector_exact, wmms_enumerate, wmms_exact, wmms_heuristic_lower_bound,
};
use wmms_core::{Instance, Ratio, Rational, SolverBudget};

/// Small instances with values `k/4`, `k` in `0..=40`, and integer weights.
fn instance_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(0i64..=40, m), n),
            prop::collection::vec(1i64..=9, n),
        )
            .prop_map(|(rows, weights)| {
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(|k| ratio(k, 4)).collect())
                    .collect();
                Instance::new(rows, weights.into_iter().map(int).collect()).unwrap()
            })
    })
}

fn positive_instance_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    instance_strategy(max_n, max_m).prop_filter("every agent values something", |inst| {
        (0..inst.agent_count()).all(|i| inst.total_value(i).is_positive())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_solver_matches_brute_force(inst in instance_strategy(3, 6)) {
        for i in 0..inst.agent_count() {
            let expected = oracle::wmms(&inst, i);
            let bb = wmms_exact(&inst, i, SolverBudget::default()).unwrap();
            let en = wmms_enumerate(&inst, i, SolverBudget::default()).unwrap();
            prop_assert_eq!(&bb.value, &expected);
            prop_assert_eq!(&en.value, &expected);
            // The witness really achieves the value.
            let achieved = wmms_core::solver::partition_share(&inst, i, &bb.witness).unwrap();
            prop_assert_eq!(achieved, expected);
        }
    }

    #[test]
    fn heuristic_never_exceeds_exact(inst in instance_strategy(3, 7), seed in any::<u64>()) {
        for i in 0..inst.agent_count() {
            let h = wmms_heuristic_lower_bound(&inst, i, 5, seed).unwrap();
            prop_assert!(h.value <= oracle::wmms(&inst, i));
        }
    }

    #[test]
    fn share_is_at_most_proportional(inst in instance_strategy(4, 6)) {
        for i in 0..inst.agent_count() {
            let share = wmms_exact(&inst, i, SolverBudget::default()).unwrap().value;
            prop_assert!(share <= inst.entitlement(i) * inst.total_value(i));
        }
    }

    #[test]
    fn round_robin_reaches_one_over_n(inst in instance_strategy(4, 7)) {
        let n = inst.agent_count();
        let alloc = round_robin(&inst);
        prop_assert!(alloc.is_complete());
        for i in 0..n {
            let got = inst.bundle_value(i, alloc.bundle(i)).unwrap();
            prop_assert!(got * int(n as i64) >= oracle::wmms(&inst, i));
        }
    }

    #[test]
    fn restricted_greedy_bounds(inst in instance_strategy(3, 7)) {
        let shares = share_vector_exact(&inst, SolverBudget::default()).unwrap();
        prop_assume!(check_restriction(&inst, &shares).unwrap().ok);
        let out = restricted_greedy(&inst, &shares, false).unwrap();
        for i in 0..inst.agent_count() {
            let got = inst.bundle_value(i, out.allocation.bundle(i)).unwrap();
            prop_assert!(&got * int(2) >= *shares.value(i));
            prop_assert!(&got <= shares.value(i));
        }
    }

    #[test]
    fn best_ratio_matches_brute_force(inst in instance_strategy(3, 6)) {
        let shares = share_vector_exact(&inst, SolverBudget::default()).unwrap();
        let best = best_achievable_min_ratio(&inst, &shares, SolverBudget::default()).unwrap();
        match oracle::best_min_ratio(&inst, shares.values()) {
            Some(r) => prop_assert_eq!(best.ratio, Ratio::Finite(r)),
            None => prop_assert_eq!(best.ratio, Ratio::Infinite),
        }
    }

    #[test]
    fn fairness_score_in_unit_range_for_complete_allocations(inst in positive_instance_strategy(3, 6)) {
        let alloc = round_robin(&inst);
        for i in 0..inst.agent_count() {
            let s = fairness_score(&inst, i, &alloc).unwrap();
            prop_assert!(!s.is_negative());
            // Some bundle is worth at most its entitlement's fraction of the total.
            prop_assert!(s <= int(1));
        }
    }

    #[test]
    fn lp_vertex_properties(inst in positive_instance_strategy(4, 8)) {
        for method in [LpMethod::Crossover, LpMethod::Simplex] {
            let f = solve_lp(&inst, method).unwrap();
            f.check_feasible(&inst).unwrap();
            prop_assert!(f.nonzero_count() <= inst.agent_count() + inst.item_count());
            let graph = build_support_graph(&f).unwrap();
            prop_assert!(graph.is_pseudoforest());
            let alloc = round_assignment(&inst, &f).unwrap();
            for i in 0..inst.agent_count() {
                let got = inst.bundle_value(i, alloc.bundle(i)).unwrap();
                let floor = inst.entitlement(i) * inst.total_value(i) - inst.max_item_value(i);
                prop_assert!(got >= floor);
                prop_assert!(got >= f.fractional_value(&inst, i) - inst.max_item_value(i));
            }
        }
    }
}

#[test]
fn equal_entitlements_give_maxmin_share() {
    let mut rng = oracle::rng(11);
    for _ in 0..100 {
        let n = 2 + (rand::Rng::random_range(&mut rng, 0..2usize));
        let m = rand::Rng::random_range(&mut rng, n..=7);
        let rows: Vec<Vec<Rational>> = (0..n)
            .map(|_| (0..m).map(|_| int(rand::Rng::random_range(&mut rng, 0..=20))).collect())
            .collect();
        let inst = Instance::new(rows, vec![int(1); n]).unwrap();
        for i in 0..n {
            let share = wmms_core::solver::mms_exact(&inst, i, SolverBudget::default()).unwrap();
            assert_eq!(share, oracle::mms(inst.row(i), n));
        }
    }
}

#[test]
fn zero_rows_have_zero_share() {
    let inst = Instance::new(vec![vec![Rational::zero(); 3], vec![int(1); 3]], vec![int(1), int(1)]).unwrap();
    assert!(wmms_exact(&inst, 0, SolverBudget::default()).unwrap().value.is_zero());
}
