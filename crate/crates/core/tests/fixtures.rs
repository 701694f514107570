mod oracle;

use std::path::PathBuf;

use wmms_core::algorithms::round_robin;
use wmms_core::generators::{counterexample, example1, random_entitlements};
use wmms_core::harness::{
    ingest_bids, instance_from_bids, report_csv, run_experiment, BidPool, ExperimentConfig,
};
use wmms_core::model::fairness_score;
use wmms_core::num::{int, ratio};
use wmms_core::solver::{best_achievable_min_ratio, mms_exact, share_vector_exact, wmms_exact};
use wmms_core::{Instance, Ratio, Rational, SolverBudget};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn example1_scores_and_share() {
    let ex = example1();
    assert_eq!(fairness_score(&ex.instance, 0, &ex.allocation_a).unwrap(), ratio(15, 16));
    assert_eq!(fairness_score(&ex.instance, 0, &ex.allocation_a_prime).unwrap(), int(1));
    assert_eq!(wmms_exact(&ex.instance, 0, SolverBudget::default()).unwrap().value, int(8));
    assert_eq!(oracle::wmms(&ex.instance, 0), int(8));
}

#[test]
fn counterexample_ratio_within_bound() {
    let cases = [(2usize, ratio(1, 10)), (3, ratio(1, 100)), (3, ratio(1, 1000))];
    let mut previous: Option<(usize, Rational)> = None;
    for (n, eps) in cases {
        let inst = counterexample(n, &eps).unwrap();
        let shares = share_vector_exact(&inst, SolverBudget::default()).unwrap();
        let best = best_achievable_min_ratio(&inst, &shares, SolverBudget::default()).unwrap();
        let Ratio::Finite(r) = best.ratio else { panic!("shares are positive") };
        assert_eq!(Some(r.clone()), oracle::best_min_ratio(&inst, shares.values()));
        let k = int(n as i64);
        let upper = (int(1) / &k + &k * &eps) / (int(1) - (&k - int(1)) * &eps);
        assert!(r >= int(1) / &k && r <= upper, "n={n} eps={eps} ratio={r}");
        if let Some((pn, pr)) = previous.take() {
            if pn == n {
                assert!(r <= pr);
            }
        }
        previous = Some((n, r));
    }
}

#[test]
fn counterexample_bound_value() {
    let k = int(3);
    let eps = ratio(1, 100);
    let upper = (int(1) / &k + &k * &eps) / (int(1) - (&k - int(1)) * &eps);
    assert_eq!(upper, ratio(109, 294));
}

#[test]
fn maxmin_share_of_small_multiset() {
    let row = vec![int(3), int(3), int(2), int(2)];
    let inst = Instance::with_common_row(row.clone(), vec![int(1), int(1)]).unwrap();
    assert_eq!(mms_exact(&inst, 0, SolverBudget::default()).unwrap(), int(5));
    assert_eq!(oracle::mms(&row, 2), int(5));
}

#[test]
fn round_robin_larger_entitlement_picks_first() {
    // Agent 2 (entitlement 2/3) picks b5, then agent 1 takes b1, and so on.
    let row = [4, 4, 4, 3, 9].iter().map(|&v| int(v)).collect();
    let inst = Instance::with_common_row(row, vec![ratio(1, 3), ratio(2, 3)]).unwrap();
    let alloc = round_robin(&inst);
    assert_eq!(alloc.to_one_based(), vec![vec![1, 3], vec![2, 4, 5]]);
    let got = inst.bundle_value(0, alloc.bundle(0)).unwrap();
    assert_eq!(got, int(8));
    assert!(got * int(2) >= wmms_exact(&inst, 0, SolverBudget::default()).unwrap().value);
}

#[test]
fn bid_fixture_loads() {
    let pool = ingest_bids(data("bids_fixture.csv")).unwrap();
    assert_eq!(pool.category_count(), 12);
    assert!(pool.categories().values().all(|bids| bids.len() == 6));
    let again = BidPool::from_reader(pool.to_csv().as_bytes()).unwrap();
    assert_eq!(again, pool);
}

#[test]
fn bid_instance_matches_golden_file() {
    let pool = ingest_bids(data("bids_fixture.csv")).unwrap();
    let seed = 7;
    let inst = instance_from_bids(&pool, random_entitlements(2, wmms_core::rng::derive_seed(seed, 1)), 3, seed).unwrap();
    let golden = Instance::from_json(&std::fs::read_to_string(data("golden_bids_n2_m3.json")).unwrap()).unwrap();
    assert_eq!(inst, golden);
}

#[test]
fn smoke_experiment_matches_golden_csv() {
    let pool = ingest_bids(data("bids_fixture.csv")).unwrap();
    let config = ExperimentConfig::from_json(&std::fs::read_to_string(data("smoke_config.json")).unwrap()).unwrap();
    let report = run_experiment(&config, &pool).unwrap();
    let expected = std::fs::read_to_string(data("smoke_report.csv")).unwrap();
    assert_eq!(report_csv(&report), expected);
}
