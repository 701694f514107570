//! Allocation procedures with WMMS guarantees.

use std::cmp::Reverse;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, Ratio};
use crate::num::{int, Rational};
use crate::solver::ShareVector;

/// Agents by descending entitlement, ties by index.
pub fn entitlement_order(instance: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.agent_count()).collect();
    order.sort_by_key(|&i| Reverse(instance.entitlement(i).clone()));
    order
}

/// Highest-valued item among `available` for `agent`; lowest index on ties.
fn favourite(instance: &Instance, agent: usize, available: &[bool]) -> Option<usize> {
    let row = instance.row(agent);
    let mut best: Option<usize> = None;
    for (j, free) in available.iter().enumerate() {
        if *free && best.is_none_or(|b| row[j] > row[b]) {
            best = Some(j);
        }
    }
    best
}

/// Agents in entitlement order take turns picking their favourite remaining
/// item until none remain. Every agent ends with at least `WMMS_i / n`.
pub fn round_robin(instance: &Instance) -> Allocation {
    let mut allocation = Allocation::empty(instance.agent_count(), instance.item_count());
    let mut available = vec![true; instance.item_count()];
    pick_in_turns(instance, &mut allocation, &mut available);
    allocation
}

fn pick_in_turns(instance: &Instance, allocation: &mut Allocation, available: &mut [bool]) {
    let order = entitlement_order(instance);
    for &agent in order.iter().cycle() {
        match favourite(instance, agent, available) {
            Some(item) => {
                available[item] = false;
                allocation.assign(agent, item);
            }
            None => break,
        }
    }
}

/// A per-agent threshold, possibly unreachable.
pub type Threshold = Ratio;

/// Bag filling: items join a bag in index order; as soon as the bag is worth at
/// least the threshold to some unsatisfied agent (lowest index first), that agent
/// takes the bag. Items left in the final bag, or never reached, stay unallocated.
pub fn bag_filling(instance: &Instance, thresholds: &[Threshold]) -> Result<Allocation> {
    let n = instance.agent_count();
    if thresholds.len() != n {
        return Err(Error::DimensionMismatch(format!("{} thresholds for {} agents", thresholds.len(), n)));
    }
    let mut allocation = Allocation::empty(n, instance.item_count());
    let mut satisfied = vec![false; n];
    let mut bag: Vec<usize> = Vec::new();
    let mut bag_values = vec![Rational::zero(); n];
    for item in 0..instance.item_count() {
        if satisfied.iter().all(|&s| s) {
            break;
        }
        bag.push(item);
        for (i, v) in bag_values.iter_mut().enumerate() {
            *v += instance.value(i, item);
        }
        let taker = (0..n).find(|&i| !satisfied[i] && Ratio::Finite(bag_values[i].clone()) >= thresholds[i]);
        if let Some(agent) = taker {
            for &b in &bag {
                allocation.assign(agent, b);
            }
            satisfied[agent] = true;
            bag.clear();
            bag_values.iter_mut().for_each(Rational::set_zero);
        }
    }
    Ok(allocation)
}

/// Bag filling with the customary thresholds `share_i / 2`.
pub fn bag_filling_half_shares(instance: &Instance, shares: &ShareVector) -> Result<Allocation> {
    let thresholds: Vec<Threshold> = shares
        .values()
        .iter()
        .map(|s| Ratio::Finite(s / int(2)))
        .collect();
    bag_filling(instance, &thresholds)
}

/// Items worth more to an agent than the agent's share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RestrictedInstanceCheck {
    pub ok: bool,
    /// 0-based `(agent, item)` pairs with `V_i(b_j) > share_i`.
    pub violations: Vec<(usize, usize)>,
}

pub fn check_restriction(instance: &Instance, shares: &ShareVector) -> Result<RestrictedInstanceCheck> {
    if shares.len() != instance.agent_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} shares for {} agents",
            shares.len(),
            instance.agent_count()
        )));
    }
    let mut violations = Vec::new();
    for i in 0..instance.agent_count() {
        let share = shares.value(i);
        for (j, v) in instance.row(i).iter().enumerate() {
            if v > share {
                violations.push((i, j));
            }
        }
    }
    Ok(RestrictedInstanceCheck {
        ok: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedOutcome {
    pub allocation: Allocation,
    /// Items handed out by the greedy phase; the `<= share` bound holds for these.
    pub core_items: usize,
    /// Whether leftover items were distributed after the greedy phase.
    pub completed: bool,
}

/// Restricted greedy: repeatedly give the unsatisfied agent / free item pair with
/// the largest `V_i(b_j) * e_i / share_i` (ties: lowest agent, then lowest item)
/// until every agent holds at least half its share or items run out.
///
/// Agents with a zero share start satisfied. With `complete`, leftovers are then
/// handed out by round-robin picking.
pub fn restricted_greedy(instance: &Instance, shares: &ShareVector, complete: bool) -> Result<RestrictedOutcome> {
    let check = check_restriction(instance, shares)?;
    if !check.ok {
        return Err(Error::RestrictionViolated(check.violations));
    }
    Ok(restricted_greedy_unchecked(instance, shares, complete))
}

/// [`restricted_greedy`] without the restriction check. Both bounds may fail
/// on instances where some item is worth more than an agent's share.
pub fn restricted_greedy_unchecked(instance: &Instance, shares: &ShareVector, complete: bool) -> RestrictedOutcome {
    let n = instance.agent_count();
    let m = instance.item_count();
    let half: Vec<Rational> = shares.values().iter().map(|s| s / int(2)).collect();
    let mut held = vec![Rational::zero(); n];
    let mut satisfied: Vec<bool> = shares.values().iter().map(|s| !s.is_positive()).collect();

    // The metric of a pair never changes, so one sorted pass suffices.
    let mut pairs: Vec<(Rational, usize, usize)> = Vec::with_capacity(n * m);
    for i in (0..n).filter(|&i| !satisfied[i]) {
        let scale = instance.entitlement(i) / shares.value(i);
        for j in 0..m {
            pairs.push((instance.value(i, j) * &scale, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut allocation = Allocation::empty(n, m);
    let mut available = vec![true; m];
    let mut core_items = 0;
    let mut cursor = 0;
    while satisfied.iter().any(|s| !s) && core_items < m {
        while cursor < pairs.len() && (satisfied[pairs[cursor].1] || !available[pairs[cursor].2]) {
            cursor += 1;
        }
        let Some(&(_, agent, item)) = pairs.get(cursor) else {
            break;
        };
        available[item] = false;
        allocation.assign(agent, item);
        core_items += 1;
        held[agent] += instance.value(agent, item);
        if held[agent] >= half[agent] {
            satisfied[agent] = true;
        }
    }
    if complete {
        pick_in_turns(instance, &mut allocation, &mut available);
    }
    RestrictedOutcome {
        allocation,
        core_items,
        completed: complete,
    }
}
