//! Brute-force reference implementations used to check the library.
//! Everything here enumerates all `n^m` item-to-agent maps directly.

#![allow(dead_code)]

use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmms_core::num::{int, ratio};
use wmms_core::{Instance, Rational};

/// Calls `f` on every map from items to agents.
pub fn for_each_assignment(n: usize, m: usize, mut f: impl FnMut(&[usize])) {
    let mut a = vec![0usize; m];
    loop {
        f(&a);
        let mut k = 0;
        while k < m {
            a[k] += 1;
            if a[k] < n {
                break;
            }
            a[k] = 0;
            k += 1;
        }
        if k == m {
            return;
        }
    }
}

pub fn bundle_values(row: &[Rational], assignment: &[usize], n: usize) -> Vec<Rational> {
    let mut totals = vec![Rational::zero(); n];
    for (j, &owner) in assignment.iter().enumerate() {
        totals[owner] += &row[j];
    }
    totals
}

/// Weighted maxmin share of `agent` by exhaustive search.
pub fn wmms(instance: &Instance, agent: usize) -> Rational {
    let n = instance.agent_count();
    let e = instance.entitlements();
    let mut best = Rational::zero();
    for_each_assignment(n, instance.item_count(), |a| {
        let totals = bundle_values(instance.row(agent), a, n);
        let worst = (0..n)
            .map(|j| &e[agent] * &totals[j] / &e[j])
            .min()
            .expect("at least one agent");
        if worst > best {
            best = worst;
        }
    });
    best
}

/// Maxmin share: split `row` into `n` bundles, maximise the smallest.
pub fn mms(row: &[Rational], n: usize) -> Rational {
    let mut best = Rational::zero();
    for_each_assignment(n, row.len(), |a| {
        let worst = bundle_values(row, a, n).into_iter().min().expect("n >= 1");
        if worst > best {
            best = worst;
        }
    });
    best
}

/// Largest achievable `min_i V_i(A_i) / share_i` over agents with a positive share.
pub fn best_min_ratio(instance: &Instance, shares: &[Rational]) -> Option<Rational> {
    let n = instance.agent_count();
    let mut best: Option<Rational> = None;
    for_each_assignment(n, instance.item_count(), |a| {
        let mut worst: Option<Rational> = None;
        for i in 0..n {
            if !shares[i].is_positive() {
                continue;
            }
            let got: Rational = (0..a.len()).filter(|&j| a[j] == i).map(|j| instance.value(i, j)).sum();
            let r = got / &shares[i];
            if worst.as_ref().is_none_or(|w| r < *w) {
                worst = Some(r);
            }
        }
        if let Some(w) = worst {
            if best.as_ref().is_none_or(|b| w > *b) {
                best = Some(w);
            }
        }
    });
    best
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Values `k/100` with `k` uniform in `lo..=hi`; entitlements proportional to
/// integers in `1..=weight_max`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: i64, hi: i64, weight_max: i64) -> Instance {
    let rows = (0..n)
        .map(|_| (0..m).map(|_| ratio(rng.random_range(lo..=hi), 100)).collect())
        .collect();
    let weights = (0..n).map(|_| int(rng.random_range(1..=weight_max))).collect();
    Instance::new(rows, weights).expect("generated instance is valid")
}
