//! Instances, allocations and fairness measures.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{format_rational, parse_rational, NumberText, Rational};
use crate::solver::ShareVector;

/// `n` agents with additive valuations over `m` items and entitlements summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    valuations: Vec<Vec<Rational>>,
    entitlements: Vec<Rational>,
    item_count: usize,
}

impl Instance {
    /// Validates the data and rescales entitlements to sum to exactly one.
    pub fn new(valuations: Vec<Vec<Rational>>, entitlements: Vec<Rational>) -> Result<Self> {
        let n = entitlements.len();
        if n == 0 {
            return Err(Error::NoAgents);
        }
        if valuations.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} entitlements but {} valuation rows",
                n,
                valuations.len()
            )));
        }
        let m = valuations[0].len();
        for (i, row) in valuations.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "valuation row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    m
                )));
            }
            if let Some(j) = row.iter().position(|v| v.is_negative()) {
                return Err(Error::NegativeValuation { agent: i, item: j });
            }
        }
        if let Some(i) = entitlements.iter().position(|e| !e.is_positive()) {
            return Err(Error::NonPositiveEntitlement { agent: i });
        }
        let sum: Rational = entitlements.iter().sum();
        if sum.is_zero() {
            return Err(Error::ZeroEntitlementSum);
        }
        let entitlements = if sum.is_one() {
            entitlements
        } else {
            entitlements.into_iter().map(|e| e / &sum).collect()
        };
        Ok(Instance {
            valuations,
            entitlements,
            item_count: m,
        })
    }

    /// Same valuation row for every agent.
    pub fn with_common_row(row: Vec<Rational>, entitlements: Vec<Rational>) -> Result<Self> {
        let rows = vec![row; entitlements.len()];
        Self::new(rows, entitlements)
    }

    pub fn agent_count(&self) -> usize {
        self.entitlements.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn value(&self, agent: usize, item: usize) -> &Rational {
        &self.valuations[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.valuations[agent]
    }

    pub fn valuations(&self) -> &[Vec<Rational>] {
        &self.valuations
    }

    pub fn entitlement(&self, agent: usize) -> &Rational {
        &self.entitlements[agent]
    }

    pub fn entitlements(&self) -> &[Rational] {
        &self.entitlements
    }

    pub fn has_equal_entitlements(&self) -> bool {
        self.entitlements.windows(2).all(|w| w[0] == w[1])
    }

    /// `V_i(M)`.
    pub fn total_value(&self, agent: usize) -> Rational {
        self.valuations[agent].iter().sum()
    }

    /// `max_j V_i({b_j})`, zero when there are no items.
    pub fn max_item_value(&self, agent: usize) -> Rational {
        self.valuations[agent]
            .iter()
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Additive value of `bundle` to `agent`.
    pub fn bundle_value<'a>(
        &self,
        agent: usize,
        bundle: impl IntoIterator<Item = &'a usize>,
    ) -> Result<Rational> {
        self.check_agent(agent)?;
        let row = &self.valuations[agent];
        let mut total = Rational::zero();
        for &item in bundle {
            let v = row.get(item).ok_or(Error::IndexOutOfRange {
                what: "item",
                index: item,
                len: self.item_count,
            })?;
            total += v;
        }
        Ok(total)
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent < self.agent_count() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "agent",
                index: agent,
                len: self.agent_count(),
            })
        }
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            n: self.agent_count(),
            m: self.item_count,
            entitlements: self
                .entitlements
                .iter()
                .map(|e| NumberText(format_rational(e)))
                .collect(),
            valuations: self
                .valuations
                .iter()
                .map(|row| row.iter().map(|v| NumberText(format_rational(v))).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text)?;
        validate_instance(&raw)
    }
}

/// On-disk instance format. Numbers may be JSON numbers, decimal strings or `"p/q"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawInstance {
    pub n: usize,
    pub m: usize,
    pub entitlements: Vec<NumberText>,
    pub valuations: Vec<Vec<NumberText>>,
}

pub fn validate_instance(raw: &RawInstance) -> Result<Instance> {
    if raw.entitlements.len() != raw.n {
        return Err(Error::DimensionMismatch(format!(
            "n = {} but {} entitlements given",
            raw.n,
            raw.entitlements.len()
        )));
    }
    if raw.valuations.len() != raw.n {
        return Err(Error::DimensionMismatch(format!(
            "n = {} but {} valuation rows given",
            raw.n,
            raw.valuations.len()
        )));
    }
    if let Some((i, row)) = raw
        .valuations
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != raw.m)
    {
        return Err(Error::DimensionMismatch(format!(
            "m = {} but valuation row {} has {} entries",
            raw.m,
            i + 1,
            row.len()
        )));
    }
    let entitlements = raw
        .entitlements
        .iter()
        .map(|t| parse_rational(&t.0))
        .collect::<Result<Vec<_>>>()?;
    let valuations = raw
        .valuations
        .iter()
        .map(|row| row.iter().map(|t| parse_rational(&t.0)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Instance::new(valuations, entitlements)
}

/// Disjoint bundles of 0-based item indices, one per agent. Items not in any
/// bundle are unallocated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    bundles: Vec<BTreeSet<usize>>,
    item_count: usize,
}

impl Allocation {
    pub fn new(bundles: Vec<BTreeSet<usize>>, item_count: usize) -> Result<Self> {
        let mut seen = vec![false; item_count];
        for (agent, bundle) in bundles.iter().enumerate() {
            for &item in bundle {
                if item >= item_count {
                    return Err(Error::InvalidAllocation(format!(
                        "agent {} holds item {} but there are only {} items",
                        agent + 1,
                        item + 1,
                        item_count
                    )));
                }
                if std::mem::replace(&mut seen[item], true) {
                    return Err(Error::InvalidAllocation(format!(
                        "item {} assigned twice",
                        item + 1
                    )));
                }
            }
        }
        Ok(Allocation {
            bundles,
            item_count,
        })
    }

    pub fn empty(agents: usize, item_count: usize) -> Self {
        Allocation {
            bundles: vec![BTreeSet::new(); agents],
            item_count,
        }
    }

    /// Complete allocation from an item -> agent assignment vector.
    pub fn from_assignment(assignment: &[usize], agents: usize) -> Result<Self> {
        let mut bundles = vec![BTreeSet::new(); agents];
        for (item, &agent) in assignment.iter().enumerate() {
            bundles
                .get_mut(agent)
                .ok_or(Error::IndexOutOfRange {
                    what: "agent",
                    index: agent,
                    len: agents,
                })?
                .insert(item);
        }
        Ok(Allocation {
            bundles,
            item_count: assignment.len(),
        })
    }

    /// Builds an allocation from 1-based item lists (the JSON format).
    pub fn from_one_based(lists: &[Vec<usize>], item_count: usize) -> Result<Self> {
        let mut bundles = Vec::with_capacity(lists.len());
        for list in lists {
            let mut set = BTreeSet::new();
            for &item in list {
                if item == 0 {
                    return Err(Error::InvalidAllocation("item indices are 1-based".into()));
                }
                if !set.insert(item - 1) {
                    return Err(Error::InvalidAllocation(format!("item {item} repeated")));
                }
            }
            bundles.push(set);
        }
        Self::new(bundles, item_count)
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.bundles
            .iter()
            .map(|b| b.iter().map(|i| i + 1).collect())
            .collect()
    }

    pub fn agent_count(&self) -> usize {
        self.bundles.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn bundle(&self, agent: usize) -> &BTreeSet<usize> {
        &self.bundles[agent]
    }

    pub fn bundles(&self) -> &[BTreeSet<usize>] {
        &self.bundles
    }

    pub fn assign(&mut self, agent: usize, item: usize) {
        debug_assert!(self.owner(item).is_none());
        self.bundles[agent].insert(item);
    }

    pub fn owner(&self, item: usize) -> Option<usize> {
        self.bundles.iter().position(|b| b.contains(&item))
    }

    pub fn allocated_count(&self) -> usize {
        self.bundles.iter().map(BTreeSet::len).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.allocated_count() == self.item_count
    }

    pub fn unallocated(&self) -> Vec<usize> {
        let mut taken = vec![false; self.item_count];
        for b in &self.bundles {
            for &i in b {
                taken[i] = true;
            }
        }
        (0..self.item_count).filter(|&i| !taken[i]).collect()
    }

    pub fn check_against(&self, instance: &Instance) -> Result<()> {
        if self.agent_count() != instance.agent_count() || self.item_count != instance.item_count() {
            return Err(Error::DimensionMismatch(format!(
                "allocation is {}x{}, instance is {}x{}",
                self.agent_count(),
                self.item_count,
                instance.agent_count(),
                instance.item_count()
            )));
        }
        Ok(())
    }
}

/// A ratio that may be unbounded (share of zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ratio {
    Finite(Rational),
    Infinite,
}

impl Ratio {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Ratio::Finite(r) => Some(r),
            Ratio::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ratio::Finite(r) => crate::num::to_f64(r),
            Ratio::Infinite => f64::INFINITY,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "inf" | "+inf" | "infinity" => Ok(Ratio::Infinite),
            _ => parse_rational(text).map(Ratio::Finite),
        }
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ratio::Finite(a), Ratio::Finite(b)) => a.cmp(b),
            (Ratio::Finite(_), Ratio::Infinite) => Ordering::Less,
            (Ratio::Infinite, Ratio::Finite(_)) => Ordering::Greater,
            (Ratio::Infinite, Ratio::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => f.write_str(&format_rational(r)),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Ratio::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// `F^i_A = min_j V_i(A_j) / (V_i(M) e_j)`.
pub fn fairness_score(instance: &Instance, agent: usize, allocation: &Allocation) -> Result<Rational> {
    instance.check_agent(agent)?;
    allocation.check_against(instance)?;
    let total = instance.total_value(agent);
    if total.is_zero() {
        return Err(Error::ZeroTotalValuation { agent });
    }
    let mut best: Option<Rational> = None;
    for (j, bundle) in allocation.bundles().iter().enumerate() {
        let v = instance.bundle_value(agent, bundle)?;
        let score = v / (&total * instance.entitlement(j));
        if best.as_ref().is_none_or(|b| score < *b) {
            best = Some(score);
        }
    }
    Ok(best.expect("at least one agent"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentGuarantee {
    #[serde(with = "crate::num::serde_rational")]
    pub received_value: Rational,
    #[serde(with = "crate::num::serde_rational")]
    pub share_value: Rational,
    pub ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub per_agent: Vec<AgentGuarantee>,
    pub min_ratio: Ratio,
}

impl GuaranteeReport {
    /// Whether every agent with a positive share receives at least `alpha` times it.
    pub fn meets(&self, alpha: &Rational) -> bool {
        self.min_ratio >= Ratio::Finite(alpha.clone())
    }
}

pub fn guarantee_report(
    instance: &Instance,
    allocation: &Allocation,
    shares: &ShareVector,
) -> Result<GuaranteeReport> {
    guarantee_report_from_values(instance, allocation, shares.values())
}

pub fn guarantee_report_from_values(
    instance: &Instance,
    allocation: &Allocation,
    shares: &[Rational],
) -> Result<GuaranteeReport> {
    allocation.check_against(instance)?;
    if shares.len() != instance.agent_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} shares for {} agents",
            shares.len(),
            instance.agent_count()
        )));
    }
    let mut per_agent = Vec::with_capacity(shares.len());
    let mut min_ratio = Ratio::Infinite;
    for (i, share) in shares.iter().enumerate() {
        let received = instance.bundle_value(i, allocation.bundle(i))?;
        let ratio = if share.is_positive() {
            Ratio::Finite(&received / share)
        } else {
            Ratio::Infinite
        };
        if ratio < min_ratio {
            min_ratio = ratio.clone();
        }
        per_agent.push(AgentGuarantee {
            received_value: received,
            share_value: share.clone(),
            ratio,
        });
    }
    Ok(GuaranteeReport {
        per_agent,
        min_ratio,
    })
}
