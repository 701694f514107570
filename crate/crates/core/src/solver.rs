//! Weighted maxmin shares.
//!
//! `WMMS_i = max over n-partitions A of e_i * min_j V_i(A_j) / e_j`.
//!
//! The exact solver is a depth-first branch and bound over item -> bundle
//! assignments. Values and entitlements are rescaled to integers first so the
//! inner loop only multiplies and compares machine integers (`i128`, or
//! `BigInt` when magnitudes are too large).

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{guarantee_report_from_values, Allocation, Instance, Ratio};
use crate::num::{fits_i128, frac_le, frac_lt, scale_to_integers, to_f64, Rational, SearchInt};
use crate::rng;

pub const DEFAULT_MAX_STATES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBudget {
    pub max_states: u64,
    pub time_limit: Option<Duration>,
}

impl SolverBudget {
    pub fn new(max_states: u64) -> Result<Self> {
        if max_states == 0 {
            return Err(Error::InvalidConfig("max_states must be at least 1".into()));
        }
        Ok(SolverBudget {
            max_states,
            time_limit: None,
        })
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    /// Whether `agents^items` assignment vectors fit in the state budget.
    pub fn covers_enumeration(&self, agents: usize, items: usize) -> bool {
        let mut total: u64 = 1;
        for _ in 0..items {
            total = match total.checked_mul(agents as u64) {
                Some(t) if t <= self.max_states => t,
                _ => return false,
            };
        }
        true
    }
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            max_states: DEFAULT_MAX_STATES,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShareMethod {
    Exact,
    HeuristicLowerBound,
}

impl ShareMethod {
    pub fn label(self) -> &'static str {
        match self {
            ShareMethod::Exact => "exact",
            ShareMethod::HeuristicLowerBound => "heuristic-lower-bound",
        }
    }
}

/// Per-agent shares plus, for exact shares, the partition achieving each one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector {
    values: Vec<Rational>,
    witnesses: Option<Vec<Allocation>>,
    method: ShareMethod,
}

impl ShareVector {
    pub fn new(values: Vec<Rational>, witnesses: Option<Vec<Allocation>>, method: ShareMethod) -> Self {
        ShareVector {
            values,
            witnesses,
            method,
        }
    }

    /// Shares supplied by the caller (e.g. from a file) and trusted as exact.
    pub fn from_exact_values(values: Vec<Rational>) -> Self {
        Self::new(values, None, ShareMethod::Exact)
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, agent: usize) -> &Rational {
        &self.values[agent]
    }

    pub fn witnesses(&self) -> Option<&[Allocation]> {
        self.witnesses.as_deref()
    }

    pub fn method(&self) -> ShareMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WmmsSolution {
    pub value: Rational,
    pub witness: Allocation,
    pub states_explored: u64,
}

/// `e_i * min_j V_i(A_j) / e_j` for a given partition.
pub fn partition_share(instance: &Instance, agent: usize, partition: &Allocation) -> Result<Rational> {
    let e_i = instance.entitlement(agent);
    let mut best: Option<Rational> = None;
    for (j, bundle) in partition.bundles().iter().enumerate() {
        let v = instance.bundle_value(agent, bundle)? * e_i / instance.entitlement(j);
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    }
    Ok(best.unwrap_or_else(Rational::zero))
}

/// Agent row and entitlements over common denominators.
struct ScaledAgent {
    values: Vec<BigInt>,
    weights: Vec<BigInt>,
}

impl ScaledAgent {
    fn new(instance: &Instance, agent: usize) -> Self {
        let (values, _) = scale_to_integers(instance.row(agent));
        let (weights, _) = scale_to_integers(instance.entitlements());
        ScaledAgent { values, weights }
    }

    fn fits_i128(&self) -> bool {
        let total: BigInt = self.values.iter().sum();
        let max_w = self.weights.iter().max().cloned().unwrap_or_default();
        fits_i128(&total, &max_w)
    }
}

/// Items with positive value in descending value order (ties by index).
struct PartitionProblem<T> {
    order: Vec<usize>,
    values: Vec<T>,
    zero_items: Vec<usize>,
    weights: Vec<T>,
    /// `suffix[k]` = total value of sorted items `k..`.
    suffix: Vec<T>,
    item_count: usize,
}

impl<T: SearchInt> PartitionProblem<T> {
    fn new(scaled: &ScaledAgent) -> Self {
        let mut order: Vec<usize> = (0..scaled.values.len())
            .filter(|&j| scaled.values[j].is_positive())
            .collect();
        order.sort_by(|&a, &b| scaled.values[b].cmp(&scaled.values[a]).then(a.cmp(&b)));
        let zero_items = (0..scaled.values.len())
            .filter(|&j| scaled.values[j].is_zero())
            .collect();
        let values: Vec<T> = order.iter().map(|&j| T::from_big(&scaled.values[j])).collect();
        let mut suffix = vec![T::zero(); values.len() + 1];
        for k in (0..values.len()).rev() {
            suffix[k] = suffix[k + 1].clone() + values[k].clone();
        }
        PartitionProblem {
            order,
            values,
            zero_items,
            weights: scaled.weights.iter().map(T::from_big).collect(),
            suffix,
            item_count: scaled.values.len(),
        }
    }

    fn bundles(&self) -> usize {
        self.weights.len()
    }

    /// Min over bundles of `load_j / w_j` as `(load, w)`.
    fn objective(&self, loads: &[T]) -> (T, T) {
        let mut best = (loads[0].clone(), self.weights[0].clone());
        for j in 1..loads.len() {
            if frac_lt(&loads[j], &self.weights[j], &best.0, &best.1) {
                best = (loads[j].clone(), self.weights[j].clone());
            }
        }
        best
    }

    /// Sorted-position assignment -> allocation over all items.
    fn to_allocation(&self, assign: &[usize]) -> Allocation {
        let mut full = vec![0usize; self.item_count];
        for (k, &j) in assign.iter().enumerate() {
            full[self.order[k]] = j;
        }
        for &z in &self.zero_items {
            full[z] = 0;
        }
        Allocation::from_assignment(&full, self.bundles()).expect("bundle indices in range")
    }

    /// Each item, largest first, goes to the bundle with the smallest `load / w`.
    fn greedy(&self) -> (Vec<usize>, Vec<T>) {
        let mut loads = vec![T::zero(); self.bundles()];
        let mut assign = Vec::with_capacity(self.values.len());
        for v in &self.values {
            let mut target = 0;
            for j in 1..loads.len() {
                if frac_lt(&loads[j], &self.weights[j], &loads[target], &self.weights[target]) {
                    target = j;
                }
            }
            loads[target] = loads[target].clone() + v.clone();
            assign.push(target);
        }
        (assign, loads)
    }
}

struct BranchAndBound<'a, T> {
    problem: &'a PartitionProblem<T>,
    loads: Vec<T>,
    assign: Vec<usize>,
    best: (T, T),
    best_assign: Vec<usize>,
    /// `total / sum(w)`: no partition can beat it.
    ceiling: (T, T),
    states: u64,
    budget: SolverBudget,
    /// Only read when a time limit is set; `Instant` is unavailable in wasm.
    deadline: Option<Instant>,
    optimal: bool,
    exhausted: bool,
}

impl<T: SearchInt> BranchAndBound<'_, T> {
    fn run(problem: &PartitionProblem<T>, budget: SolverBudget) -> (Vec<usize>, u64, bool) {
        let (greedy_assign, greedy_loads) = problem.greedy();
        let total_w = problem
            .weights
            .iter()
            .cloned()
            .fold(T::zero(), |a, b| a + b);
        let mut search = BranchAndBound {
            problem,
            loads: vec![T::zero(); problem.bundles()],
            assign: vec![0; problem.values.len()],
            best: problem.objective(&greedy_loads),
            best_assign: greedy_assign,
            ceiling: (problem.suffix[0].clone(), total_w),
            states: 0,
            budget,
            deadline: budget.time_limit.map(|l| Instant::now() + l),
            optimal: false,
            exhausted: false,
        };
        search.optimal = frac_le(&search.ceiling.0, &search.ceiling.1, &search.best.0, &search.best.1);
        if !search.optimal {
            search.descend(0);
        }
        (search.best_assign, search.states, search.exhausted)
    }

    fn descend(&mut self, k: usize) {
        self.states += 1;
        if self.states > self.budget.max_states {
            self.exhausted = true;
            return;
        }
        if self.states.is_multiple_of(4096) {
            if let Some(deadline) = self.deadline {
                if Instant::now() > deadline {
                    self.exhausted = true;
                    return;
                }
            }
        }
        let p = self.problem;
        let remaining_items = p.values.len() - k;
        if remaining_items == 0 {
            let value = p.objective(&self.loads);
            if frac_lt(&self.best.0, &self.best.1, &value.0, &value.1) {
                self.best = value;
                self.best_assign.clone_from(&self.assign);
                if frac_le(&self.ceiling.0, &self.ceiling.1, &self.best.0, &self.best.1) {
                    self.optimal = true;
                }
            }
            return;
        }
        // Every bundle still empty must receive an item for the min to be positive.
        let empty = self.loads.iter().filter(|l| l.is_zero()).count();
        if empty > remaining_items {
            return;
        }
        let rest = &p.suffix[k];
        for j in 0..self.loads.len() {
            let optimistic = self.loads[j].clone() + rest.clone();
            if frac_le(&optimistic, &p.weights[j], &self.best.0, &self.best.1) {
                return;
            }
        }

        let mut candidates: Vec<usize> = (0..self.loads.len()).collect();
        candidates.sort_by(|&a, &b| {
            let lhs = self.loads[a].clone() * p.weights[b].clone();
            let rhs = self.loads[b].clone() * p.weights[a].clone();
            lhs.cmp(&rhs).then(a.cmp(&b))
        });
        let v = p.values[k].clone();
        for (pos, &j) in candidates.iter().enumerate() {
            // Bundles with identical weight and load are interchangeable.
            let duplicate = candidates[..pos]
                .iter()
                .any(|&q| p.weights[q] == p.weights[j] && self.loads[q] == self.loads[j]);
            if duplicate {
                continue;
            }
            self.loads[j] = self.loads[j].clone() + v.clone();
            self.assign[k] = j;
            self.descend(k + 1);
            self.loads[j] = self.loads[j].clone() - v.clone();
            if self.optimal || self.exhausted {
                return;
            }
        }
    }
}

fn solve_partition<T: SearchInt>(problem: &PartitionProblem<T>, budget: SolverBudget) -> (Allocation, u64, bool) {
    let (assign, states, exhausted) = BranchAndBound::run(problem, budget);
    (problem.to_allocation(&assign), states, exhausted)
}

/// Exact `WMMS_i` with an achieving partition.
pub fn wmms_exact(instance: &Instance, agent: usize, budget: SolverBudget) -> Result<WmmsSolution> {
    instance.check_agent(agent)?;
    let scaled = ScaledAgent::new(instance, agent);
    let (witness, states, exhausted) = if scaled.fits_i128() {
        solve_partition(&PartitionProblem::<i128>::new(&scaled), budget)
    } else {
        solve_partition(&PartitionProblem::<BigInt>::new(&scaled), budget)
    };
    let value = partition_share(instance, agent, &witness)?;
    if exhausted {
        return Err(Error::BudgetExhausted {
            explored: states,
            best: Some(value),
        });
    }
    Ok(WmmsSolution {
        value,
        witness,
        states_explored: states,
    })
}

fn enumerate_partitions<T: SearchInt>(scaled: &ScaledAgent) -> (Vec<usize>, u64) {
    let m = scaled.values.len();
    let n = scaled.weights.len();
    let values: Vec<T> = scaled.values.iter().map(T::from_big).collect();
    let weights: Vec<T> = scaled.weights.iter().map(T::from_big).collect();
    let mut assign = vec![0usize; m];
    let mut best: Option<(T, T, Vec<usize>)> = None;
    let mut states = 0u64;
    loop {
        states += 1;
        let mut loads = vec![T::zero(); n];
        for (item, &j) in assign.iter().enumerate() {
            loads[j] = loads[j].clone() + values[item].clone();
        }
        let mut min = (loads[0].clone(), weights[0].clone());
        for j in 1..n {
            if frac_lt(&loads[j], &weights[j], &min.0, &min.1) {
                min = (loads[j].clone(), weights[j].clone());
            }
        }
        if best
            .as_ref()
            .is_none_or(|(bn, bd, _)| frac_lt(bn, bd, &min.0, &min.1))
        {
            best = Some((min.0, min.1, assign.clone()));
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == m {
                return (best.expect("at least one assignment").2, states);
            }
            assign[pos] += 1;
            if assign[pos] < n {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// Plain enumeration of all `n^m` assignments, no pruning. Used as a reference
/// for the branch and bound.
pub fn wmms_enumerate(instance: &Instance, agent: usize, budget: SolverBudget) -> Result<WmmsSolution> {
    instance.check_agent(agent)?;
    if !budget.covers_enumeration(instance.agent_count(), instance.item_count()) {
        return Err(Error::BudgetExhausted {
            explored: 0,
            best: None,
        });
    }
    let scaled = ScaledAgent::new(instance, agent);
    let (assign, states) = if scaled.fits_i128() {
        enumerate_partitions::<i128>(&scaled)
    } else {
        enumerate_partitions::<BigInt>(&scaled)
    };
    let witness = Allocation::from_assignment(&assign, instance.agent_count())?;
    Ok(WmmsSolution {
        value: partition_share(instance, agent, &witness)?,
        witness,
        states_explored: states,
    })
}

/// Maxmin share under equal entitlements.
pub fn mms_exact(instance: &Instance, agent: usize, budget: SolverBudget) -> Result<Rational> {
    if !instance.has_equal_entitlements() {
        return Err(Error::UnequalEntitlements);
    }
    Ok(wmms_exact(instance, agent, budget)?.value)
}

/// Exact shares for every agent.
pub fn share_vector_exact(instance: &Instance, budget: SolverBudget) -> Result<ShareVector> {
    let agents: Vec<usize> = (0..instance.agent_count()).collect();
    #[cfg(feature = "parallel")]
    let solved: Vec<Result<WmmsSolution>> = {
        use rayon::prelude::*;
        agents.par_iter().map(|&i| wmms_exact(instance, i, budget)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let solved: Vec<Result<WmmsSolution>> = agents.iter().map(|&i| wmms_exact(instance, i, budget)).collect();
    let mut values = Vec::with_capacity(agents.len());
    let mut witnesses = Vec::with_capacity(agents.len());
    for s in solved {
        let s = s?;
        values.push(s.value);
        witnesses.push(s.witness);
    }
    Ok(ShareVector::new(values, Some(witnesses), ShareMethod::Exact))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicSolution {
    pub value: Rational,
    pub witness: Allocation,
}

/// Lexicographic quality of a partition: larger min ratio, then fewer bundles at the min.
fn partition_key<T: SearchInt>(loads: &[T], weights: &[T]) -> (T, T, usize) {
    let mut min = (loads[0].clone(), weights[0].clone());
    let mut count = 1;
    for j in 1..loads.len() {
        let l = &loads[j];
        let w = &weights[j];
        if frac_lt(l, w, &min.0, &min.1) {
            min = (l.clone(), w.clone());
            count = 1;
        } else if frac_le(l, w, &min.0, &min.1) {
            count += 1;
        }
    }
    (min.0, min.1, count)
}

fn key_better<T: SearchInt>(a: &(T, T, usize), b: &(T, T, usize)) -> bool {
    frac_lt(&b.0, &b.1, &a.0, &a.1) || (frac_le(&b.0, &b.1, &a.0, &a.1) && frac_le(&a.0, &a.1, &b.0, &b.1) && a.2 < b.2)
}

/// First-improvement local search with single-item relocations and pairwise swaps,
/// always touching the currently worst bundle.
fn improve_partition<T: SearchInt>(values: &[T], weights: &[T], assign: &mut [usize], loads: &mut [T]) {
    let n = weights.len();
    if n < 2 {
        return;
    }
    let mut trial = loads.to_vec();
    'outer: loop {
        let current = partition_key(loads, weights);
        let worst = (0..n)
            .find(|&j| frac_le(&loads[j], &weights[j], &current.0, &current.1))
            .expect("min bundle exists");
        for x in 0..values.len() {
            let from = assign[x];
            if from == worst || values[x].is_zero() {
                continue;
            }
            trial.clone_from_slice(loads);
            trial[from] = trial[from].clone() - values[x].clone();
            trial[worst] = trial[worst].clone() + values[x].clone();
            if key_better(&partition_key(&trial, weights), &current) {
                assign[x] = worst;
                loads.clone_from_slice(&trial);
                continue 'outer;
            }
        }
        for x in 0..values.len() {
            if assign[x] != worst {
                continue;
            }
            for y in 0..values.len() {
                let other = assign[y];
                if other == worst || values[y] <= values[x] {
                    continue;
                }
                let delta = values[y].clone() - values[x].clone();
                trial.clone_from_slice(loads);
                trial[worst] = trial[worst].clone() + delta.clone();
                trial[other] = trial[other].clone() - delta;
                if key_better(&partition_key(&trial, weights), &current) {
                    assign[x] = other;
                    assign[y] = worst;
                    loads.clone_from_slice(&trial);
                    continue 'outer;
                }
            }
        }
        return;
    }
}

fn heuristic_search<T: SearchInt>(
    scaled: &ScaledAgent,
    entitlements: &[Rational],
    iterations: usize,
    rng: &mut rng::StreamRng,
) -> Vec<usize> {
    let values: Vec<T> = scaled.values.iter().map(T::from_big).collect();
    let weights: Vec<T> = scaled.weights.iter().map(T::from_big).collect();
    let m = values.len();
    let n = weights.len();
    let loads_of = |assign: &[usize]| {
        let mut loads = vec![T::zero(); n];
        for (x, &j) in assign.iter().enumerate() {
            loads[j] = loads[j].clone() + values[x].clone();
        }
        loads
    };

    // First start: largest item first into the relatively lightest bundle.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    let mut assign = vec![0usize; m];
    let mut loads = vec![T::zero(); n];
    for &x in &order {
        let mut target = 0;
        for j in 1..n {
            if frac_lt(&loads[j], &weights[j], &loads[target], &weights[target]) {
                target = j;
            }
        }
        assign[x] = target;
        loads[target] = loads[target].clone() + values[x].clone();
    }
    improve_partition(&values, &weights, &mut assign, &mut loads);
    let mut best_key = partition_key(&loads, &weights);
    let mut best = assign;

    let probs: Vec<f64> = entitlements.iter().map(to_f64).collect();
    let picker = WeightedIndex::new(&probs).expect("positive entitlements");
    for _ in 1..iterations {
        let mut assign: Vec<usize> = (0..m).map(|_| picker.sample(rng)).collect();
        let mut loads = loads_of(&assign);
        improve_partition(&values, &weights, &mut assign, &mut loads);
        let key = partition_key(&loads, &weights);
        if frac_lt(&best_key.0, &best_key.1, &key.0, &key.1) {
            best_key = key;
            best = assign;
        }
    }
    best
}

/// Lower bound on `WMMS_i` from seeded local search with `iterations` restarts.
pub fn wmms_heuristic_lower_bound(
    instance: &Instance,
    agent: usize,
    iterations: usize,
    seed: u64,
) -> Result<HeuristicSolution> {
    instance.check_agent(agent)?;
    let iterations = iterations.max(1);
    let scaled = ScaledAgent::new(instance, agent);
    let mut rng = rng::substream(seed, agent as u64);
    let assign = if scaled.fits_i128() {
        heuristic_search::<i128>(&scaled, instance.entitlements(), iterations, &mut rng)
    } else {
        heuristic_search::<BigInt>(&scaled, instance.entitlements(), iterations, &mut rng)
    };
    let witness = Allocation::from_assignment(&assign, instance.agent_count())?;
    Ok(HeuristicSolution {
        value: partition_share(instance, agent, &witness)?,
        witness,
    })
}

pub fn share_vector_heuristic(instance: &Instance, iterations: usize, seed: u64) -> Result<ShareVector> {
    let mut values = Vec::with_capacity(instance.agent_count());
    let mut witnesses = Vec::with_capacity(instance.agent_count());
    for i in 0..instance.agent_count() {
        let h = wmms_heuristic_lower_bound(instance, i, iterations, seed)?;
        values.push(h.value);
        witnesses.push(h.witness);
    }
    Ok(ShareVector::new(values, Some(witnesses), ShareMethod::HeuristicLowerBound))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestAllocation {
    pub ratio: Ratio,
    pub allocation: Allocation,
    pub states_explored: u64,
}

/// Per-agent scores `load_a * c_a` with `c_a = num_a / den_a`, scaled to integers.
struct RatioProblem<T> {
    /// `values[a][k]` for items in search order.
    values: Vec<Vec<T>>,
    order: Vec<usize>,
    active: Vec<bool>,
    coef_num: Vec<T>,
    coef_den: Vec<T>,
    /// `suffix[a][k]` = value of items `k..` to agent `a`.
    suffix: Vec<Vec<T>>,
}

impl<T: SearchInt> RatioProblem<T> {
    fn score(&self, agent: usize, load: &T) -> (T, T) {
        (load.clone() * self.coef_num[agent].clone(), self.coef_den[agent].clone())
    }

    fn objective(&self, loads: &[T]) -> Option<(T, T)> {
        let mut best: Option<(T, T)> = None;
        for a in 0..loads.len() {
            if !self.active[a] {
                continue;
            }
            let s = self.score(a, &loads[a]);
            if best.as_ref().is_none_or(|b| frac_lt(&s.0, &s.1, &b.0, &b.1)) {
                best = Some(s);
            }
        }
        best
    }
}

struct RatioSearch<'a, T> {
    p: &'a RatioProblem<T>,
    loads: Vec<T>,
    assign: Vec<usize>,
    best: Option<(T, T)>,
    best_assign: Vec<usize>,
    states: u64,
    budget: SolverBudget,
    deadline: Option<Instant>,
    exhausted: bool,
}

impl<T: SearchInt> RatioSearch<'_, T> {
    fn descend(&mut self, k: usize) {
        self.states += 1;
        if self.states > self.budget.max_states {
            self.exhausted = true;
            return;
        }
        if self.states.is_multiple_of(4096) {
            if let Some(deadline) = self.deadline {
                if Instant::now() > deadline {
                    self.exhausted = true;
                    return;
                }
            }
        }
        let p = self.p;
        let n = self.loads.len();
        if k == p.order.len() {
            let value = p.objective(&self.loads).expect("some active agent");
            if self
                .best
                .as_ref()
                .is_none_or(|b| frac_lt(&b.0, &b.1, &value.0, &value.1))
            {
                self.best = Some(value);
                self.best_assign.clone_from(&self.assign);
            }
            return;
        }
        if let Some(best) = &self.best {
            for a in 0..n {
                if !p.active[a] {
                    continue;
                }
                let optimistic = self.loads[a].clone() + p.suffix[a][k].clone();
                let s = p.score(a, &optimistic);
                if frac_le(&s.0, &s.1, &best.0, &best.1) {
                    return;
                }
            }
        }
        // Agents that gain nothing from the item are interchangeable: try one of them.
        let mut useful: Vec<usize> = (0..n)
            .filter(|&a| p.active[a] && !p.values[a][k].is_zero())
            .collect();
        useful.sort_by(|&a, &b| {
            let sa = p.score(a, &self.loads[a]);
            let sb = p.score(b, &self.loads[b]);
            (sa.0 * sb.1).cmp(&(sb.0 * sa.1)).then(a.cmp(&b))
        });
        let sink = (0..n).find(|&a| !p.active[a] || p.values[a][k].is_zero());
        for &a in useful.iter().chain(sink.iter()) {
            let v = p.values[a][k].clone();
            self.loads[a] = self.loads[a].clone() + v.clone();
            self.assign[k] = a;
            self.descend(k + 1);
            self.loads[a] = self.loads[a].clone() - v;
            if self.exhausted {
                return;
            }
        }
    }
}

fn search_best_ratio<T: SearchInt>(p: &RatioProblem<T>, agents: usize, budget: SolverBudget) -> (Vec<usize>, u64, bool) {
    let mut search = RatioSearch {
        p,
        loads: vec![T::zero(); agents],
        assign: vec![0; p.order.len()],
        best: None,
        best_assign: vec![0; p.order.len()],
        states: 0,
        budget,
        deadline: budget.time_limit.map(|l| Instant::now() + l),
        exhausted: false,
    };
    search.descend(0);
    let mut full = vec![0usize; p.order.len()];
    for (k, &a) in search.best_assign.iter().enumerate() {
        full[p.order[k]] = a;
    }
    (full, search.states, search.exhausted)
}

/// Best achievable `min_i V_i(A_i) / share_i` over all complete allocations,
/// ignoring agents whose share is zero.
pub fn best_achievable_min_ratio(
    instance: &Instance,
    shares: &ShareVector,
    budget: SolverBudget,
) -> Result<BestAllocation> {
    best_achievable_from_values(instance, shares.values(), budget)
}

pub fn best_achievable_from_values(
    instance: &Instance,
    shares: &[Rational],
    budget: SolverBudget,
) -> Result<BestAllocation> {
    let n = instance.agent_count();
    let m = instance.item_count();
    if shares.len() != n {
        return Err(Error::DimensionMismatch(format!("{} shares for {} agents", shares.len(), n)));
    }
    let active: Vec<bool> = shares.iter().map(|s| s.is_positive()).collect();
    if !active.iter().any(|&a| a) {
        let allocation = Allocation::from_assignment(&vec![0; m], n)?;
        return Ok(BestAllocation {
            ratio: Ratio::Infinite,
            allocation,
            states_explored: 0,
        });
    }

    // Agent a's ratio is load_a * q_a / (s_a * p_a) for share p_a/q_a and row denominator s_a.
    let mut numerators = Vec::with_capacity(n);
    let mut coef = Vec::with_capacity(n);
    for a in 0..n {
        let (nums, denom) = scale_to_integers(instance.row(a));
        numerators.push(nums);
        let c = if active[a] {
            Rational::new(shares[a].denom().clone(), denom * shares[a].numer())
        } else {
            Rational::zero()
        };
        coef.push(c);
    }
    // Search order: items the agents care about most (relative to their shares) first.
    let mut order: Vec<usize> = (0..m).collect();
    let weight = |j: usize| -> Rational {
        (0..n)
            .map(|a| Rational::from_integer(numerators[a][j].clone()) * &coef[a])
            .max()
            .unwrap_or_else(Rational::zero)
    };
    let weights: Vec<Rational> = (0..m).map(weight).collect();
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));

    let max_num = (0..n)
        .map(|a| numerators[a].iter().sum::<BigInt>() * coef[a].numer())
        .max()
        .unwrap_or_default();
    let max_den = coef.iter().map(|c| c.denom().clone()).max().unwrap_or_default();

    fn build<T: SearchInt>(numerators: &[Vec<BigInt>], coef: &[Rational], order: &[usize], active: &[bool]) -> RatioProblem<T> {
        let values: Vec<Vec<T>> = numerators
            .iter()
            .map(|row| order.iter().map(|&j| T::from_big(&row[j])).collect())
            .collect();
        let suffix = values
            .iter()
            .map(|row: &Vec<T>| {
                let mut s = vec![T::zero(); row.len() + 1];
                for k in (0..row.len()).rev() {
                    s[k] = s[k + 1].clone() + row[k].clone();
                }
                s
            })
            .collect();
        RatioProblem {
            values,
            order: order.to_vec(),
            active: active.to_vec(),
            coef_num: coef.iter().map(|c| T::from_big(c.numer())).collect(),
            coef_den: coef.iter().map(|c| T::from_big(c.denom())).collect(),
            suffix,
        }
    }

    let (assign, states, exhausted) = if fits_i128(&max_num, &max_den) {
        search_best_ratio(&build::<i128>(&numerators, &coef, &order, &active), n, budget)
    } else {
        search_best_ratio(&build::<BigInt>(&numerators, &coef, &order, &active), n, budget)
    };
    let allocation = Allocation::from_assignment(&assign, n)?;
    let ratio = guarantee_report_from_values(instance, &allocation, shares)?.min_ratio;
    if exhausted {
        return Err(Error::BudgetExhausted {
            explored: states,
            best: ratio.finite().cloned(),
        });
    }
    Ok(BestAllocation {
        ratio,
        allocation,
        states_explored: states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};

    fn example1() -> Instance {
        let row: Vec<Rational> = [4, 4, 4, 3, 9].iter().map(|&v| int(v)).collect();
        Instance::with_common_row(row, vec![ratio(1, 3), ratio(2, 3)]).unwrap()
    }

    fn equal(rows: Vec<Vec<i64>>) -> Instance {
        let n = rows.len();
        let rows = rows.into_iter().map(|r| r.into_iter().map(int).collect()).collect();
        Instance::new(rows, vec![int(1); n]).unwrap()
    }

    #[test]
    fn example1_share() {
        let s = wmms_exact(&example1(), 0, SolverBudget::default()).unwrap();
        assert_eq!(s.value, int(8));
        assert_eq!(partition_share(&example1(), 0, &s.witness).unwrap(), int(8));
        assert_eq!(wmms_exact(&example1(), 1, SolverBudget::default()).unwrap().value, int(16));
    }

    #[test]
    fn single_agent_share_is_total() {
        let inst = equal(vec![vec![3, 1, 4]]);
        assert_eq!(wmms_exact(&inst, 0, SolverBudget::default()).unwrap().value, int(8));
        assert_eq!(wmms_heuristic_lower_bound(&inst, 0, 1, 9).unwrap().value, int(8));
    }

    #[test]
    fn mms_small_cases() {
        let b = SolverBudget::default();
        assert_eq!(mms_exact(&equal(vec![vec![3, 3, 2, 2]; 2]), 0, b).unwrap(), int(5));
        assert_eq!(mms_exact(&equal(vec![vec![7]; 2]), 0, b).unwrap(), int(0));
        assert_eq!(mms_exact(&equal(vec![vec![1, 1, 1]; 3]), 0, b).unwrap(), int(1));
        assert!(matches!(mms_exact(&example1(), 0, b), Err(Error::UnequalEntitlements)));
    }

    #[test]
    fn no_items_means_zero_share() {
        let inst = Instance::new(vec![vec![], vec![]], vec![int(1), int(2)]).unwrap();
        assert_eq!(wmms_exact(&inst, 1, SolverBudget::default()).unwrap().value, int(0));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let row: Vec<Rational> = (1..=12).map(|v| int(v * 7 % 11 + 1)).collect();
        let inst = Instance::with_common_row(row, vec![int(1), int(2), int(3)]).unwrap();
        let err = wmms_exact(&inst, 0, SolverBudget::new(5).unwrap()).unwrap_err();
        match err {
            Error::BudgetExhausted { explored, best } => {
                assert!(explored > 5);
                assert!(best.is_some());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(SolverBudget::new(0).is_err());
        assert!(matches!(
            wmms_enumerate(&inst, 0, SolverBudget::new(1000).unwrap()),
            Err(Error::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn heuristic_reaches_example1_and_is_deterministic() {
        let h = wmms_heuristic_lower_bound(&example1(), 0, 100, 3).unwrap();
        assert_eq!(h.value, int(8));
        let a = wmms_heuristic_lower_bound(&example1(), 1, 1, 42).unwrap();
        let b = wmms_heuristic_lower_bound(&example1(), 1, 1, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_ratio_on_example1() {
        let shares = ShareVector::from_exact_values(vec![int(8), int(16)]);
        let best = best_achievable_min_ratio(&example1(), &shares, SolverBudget::default()).unwrap();
        assert_eq!(best.ratio, Ratio::Finite(int(1)));
        let single = equal(vec![vec![2, 5]]);
        let best = best_achievable_from_values(&single, &[int(7)], SolverBudget::default()).unwrap();
        assert_eq!(best.ratio, Ratio::Finite(int(1)));
        let zeros = best_achievable_from_values(&example1(), &[int(0), int(0)], SolverBudget::default()).unwrap();
        assert_eq!(zeros.ratio, Ratio::Infinite);
    }

    #[test]
    fn large_magnitudes_use_bigint_path() {
        let big = Rational::new(BigInt::from(10).pow(40u32) + 1u32, BigInt::from(3));
        let row = vec![big.clone(), big.clone(), int(1), big];
        let inst = Instance::with_common_row(row, vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let exact = wmms_exact(&inst, 0, SolverBudget::default()).unwrap();
        let brute = wmms_enumerate(&inst, 0, SolverBudget::default()).unwrap();
        assert_eq!(exact.value, brute.value);
        let h = wmms_heuristic_lower_bound(&inst, 0, 5, 1).unwrap();
        assert!(h.value <= exact.value);
    }
}
