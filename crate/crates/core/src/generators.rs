//! Instance families: the impossibility construction, the small worked example,
//! stochastic value models and random entitlements.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::entitlement_order;
use crate::error::{Error, Result};
use crate::harness::{instance_from_bids, BidPool};
use crate::model::{Allocation, Instance};
use crate::num::{format_rational, int, parse_rational, ratio, serde_rational, serde_rational_vec, Rational};
use crate::rng::{substream, StreamRng};

/// Grid resolution for sampled values: draws are multiples of `10^-6`.
pub const GRID_DIGITS: u32 = 6;
const GRID: u64 = 1_000_000;

/// `n` agents, `2n - 1` items. The first `n - 1` agents have entitlement `eps`
/// and care about the first `n` items; the last agent splits its value over
/// the first `n` items evenly and gives `eps` to each of the others. No
/// allocation gives everyone much more than `1/n` of their share.
pub fn counterexample(n: usize, epsilon: &Rational) -> Result<Instance> {
    if n < 2 {
        return Err(Error::InvalidGenerator("counterexample needs n >= 2".into()));
    }
    let agents = int(n as i64);
    let upper = int(1) / (&agents - int(1));
    if !epsilon.is_positive() || *epsilon >= upper {
        return Err(Error::InvalidGenerator(format!(
            "epsilon must lie in (0, {})",
            format_rational(&upper)
        )));
    }
    let big = int(1) - (&agents - int(1)) * epsilon;
    let m = 2 * n - 1;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n - 1 {
        let row = (0..m)
            .map(|j| match j {
                j if j < n - 1 => epsilon.clone(),
                j if j == n - 1 => big.clone(),
                _ => Rational::zero(),
            })
            .collect();
        rows.push(row);
    }
    rows.push(
        (0..m)
            .map(|j| if j < n { &big / &agents } else { epsilon.clone() })
            .collect(),
    );
    let mut entitlements = vec![epsilon.clone(); n - 1];
    entitlements.push(big);
    Instance::new(rows, entitlements)
}

/// Two agents with entitlements 1/3 and 2/3 and the row `(4, 4, 4, 3, 9)`,
/// together with two allocations and their known scores for agent 1.
#[derive(Debug, Clone)]
pub struct Example1 {
    /// Agent 2's row is a copy of agent 1's; only agent 1's data is fixed.
    pub instance: Instance,
    /// `({b5}, {b1, b2, b3, b4})`.
    pub allocation_a: Allocation,
    /// `({b1, b2}, {b3, b4, b5})`.
    pub allocation_a_prime: Allocation,
    pub fairness_a: Rational,
    pub fairness_a_prime: Rational,
    pub wmms_agent1: Rational,
}

pub fn example1() -> Example1 {
    let row = [4, 4, 4, 3, 9].iter().map(|&v| int(v)).collect();
    let instance = Instance::with_common_row(row, vec![ratio(1, 3), ratio(2, 3)]).expect("fixed data is valid");
    let allocation_a = Allocation::from_one_based(&[vec![5], vec![1, 2, 3, 4]], 5).expect("valid bundles");
    let allocation_a_prime = Allocation::from_one_based(&[vec![1, 2], vec![3, 4, 5]], 5).expect("valid bundles");
    Example1 {
        instance,
        allocation_a,
        allocation_a_prime,
        fairness_a: ratio(15, 16),
        fairness_a_prime: int(1),
        wmms_agent1: int(8),
    }
}

/// Value distribution on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distribution {
    /// Uniform on a `10^-6` grid between `lo` and `hi`.
    Uniform {
        #[serde(with = "serde_rational")]
        lo: Rational,
        #[serde(with = "serde_rational")]
        hi: Rational,
    },
    PointMass {
        #[serde(with = "serde_rational")]
        value: Rational,
    },
    /// Uniform choice among the listed values.
    Empirical {
        #[serde(with = "serde_rational_vec")]
        values: Vec<Rational>,
    },
}

impl Default for Distribution {
    fn default() -> Self {
        Distribution::Uniform {
            lo: Rational::zero(),
            hi: Rational::one(),
        }
    }
}

impl Distribution {
    pub fn uniform(lo: Rational, hi: Rational) -> Self {
        Distribution::Uniform { lo, hi }
    }

    /// Parses `uniform:LO,HI`, `point:V` or `empirical:V1,V2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidGenerator(format!("unsupported distribution '{text}'"));
        let (kind, args) = text.split_once(':').ok_or_else(bad)?;
        let values = args
            .split(',')
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        let dist = match (kind.trim(), values.as_slice()) {
            ("uniform", [lo, hi]) => Distribution::Uniform {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            ("point", [v]) => Distribution::PointMass { value: v.clone() },
            ("empirical", vs) if !vs.is_empty() => Distribution::Empirical { values: vs.to_vec() },
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Support must lie in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: &Rational| !v.is_negative() && *v <= Rational::one();
        let ok = match self {
            Distribution::Uniform { lo, hi } => in_unit(lo) && in_unit(hi) && lo <= hi,
            Distribution::PointMass { value } => in_unit(value),
            Distribution::Empirical { values } => !values.is_empty() && values.iter().all(in_unit),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGenerator(format!("distribution {self:?} is not supported on [0, 1]")))
        }
    }

    pub fn mean(&self) -> Rational {
        match self {
            Distribution::Uniform { lo, hi } => (lo + hi) / int(2),
            Distribution::PointMass { value } => value.clone(),
            Distribution::Empirical { values } => {
                values.iter().sum::<Rational>() / int(values.len() as i64)
            }
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Rational {
        match self {
            Distribution::Uniform { lo, hi } => {
                let k = rng.random_range(0..=GRID);
                lo + (hi - lo) * ratio(k as i64, GRID as i64)
            }
            Distribution::PointMass { value } => value.clone(),
            Distribution::Empirical { values } => values[rng.random_range(0..values.len())].clone(),
        }
    }
}

fn broadcast<'a>(dists: &'a [Distribution], len: usize, what: &str) -> Result<Vec<&'a Distribution>> {
    match dists.len() {
        1 => Ok(vec![&dists[0]; len]),
        l if l == len => Ok(dists.iter().collect()),
        l => Err(Error::InvalidGenerator(format!(
            "expected 1 or {len} {what} distributions, got {l}"
        ))),
    }
}

/// Each agent's values are drawn independently from that agent's distribution.
/// `distributions` has one entry per agent, or a single shared entry.
pub fn stochastic_agents(
    m: usize,
    distributions: &[Distribution],
    entitlements: Vec<Rational>,
    seed: u64,
) -> Result<Instance> {
    let n = entitlements.len();
    let dists = broadcast(distributions, n, "agent")?;
    for d in &dists {
        d.validate()?;
    }
    let rows = dists
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = substream(seed, i as u64);
            (0..m).map(|_| d.sample(&mut rng)).collect()
        })
        .collect();
    Instance::new(rows, entitlements)
}

/// Each item's value to each agent is drawn independently from that item's
/// distribution. `distributions` has one entry per item, or a single shared entry.
pub fn stochastic_items(
    m: usize,
    distributions: &[Distribution],
    entitlements: Vec<Rational>,
    seed: u64,
) -> Result<Instance> {
    let n = entitlements.len();
    let dists = broadcast(distributions, m, "item")?;
    for d in &dists {
        d.validate()?;
    }
    let mut rows = vec![Vec::with_capacity(m); n];
    for (j, d) in dists.iter().enumerate() {
        let mut rng = substream(seed, j as u64);
        for row in rows.iter_mut() {
            row.push(d.sample(&mut rng));
        }
    }
    Instance::new(rows, entitlements)
}

/// `n` independent uniform draws on `{1, ..., 10^6} / 10^6`, normalised to sum to one.
pub fn random_entitlements(n: usize, seed: u64) -> Vec<Rational> {
    let mut rng = substream(seed, u64::MAX);
    let draws: Vec<i64> = (0..n).map(|_| rng.random_range(1..=GRID as i64)).collect();
    let total: i64 = draws.iter().sum();
    draws.into_iter().map(|k| ratio(k, total)).collect()
}

/// How entitlement vectors are produced for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntitlementProfile {
    #[default]
    Equal,
    /// `e_i` proportional to `i + 1`.
    Linear,
    /// [`random_entitlements`].
    Random,
}

impl EntitlementProfile {
    pub fn entitlements(self, n: usize, seed: u64) -> Vec<Rational> {
        match self {
            EntitlementProfile::Equal => vec![ratio(1, n as i64); n],
            EntitlementProfile::Linear => {
                let total = (n * (n + 1) / 2) as i64;
                (1..=n as i64).map(|k| ratio(k, total)).collect()
            }
            EntitlementProfile::Random => random_entitlements(n, seed),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "equal" => Ok(EntitlementProfile::Equal),
            "linear" => Ok(EntitlementProfile::Linear),
            "random" => Ok(EntitlementProfile::Random),
            _ => Err(Error::InvalidGenerator(format!("unknown entitlement profile '{text}'"))),
        }
    }
}

/// Number of items each agent gets in [`proportional_count_allocation`]:
/// `floor(m e_i)`, plus one for the agents with the largest remainders
/// (ties by larger entitlement, then lower index).
pub fn proportional_counts(instance: &Instance) -> Vec<usize> {
    let n = instance.agent_count();
    let m = int(instance.item_count() as i64);
    let mut counts = Vec::with_capacity(n);
    let mut remainders = Vec::with_capacity(n);
    for i in 0..n {
        let share = &m * instance.entitlement(i);
        let floor = share.floor();
        counts.push(usize::try_from(floor.to_integer()).expect("count fits"));
        remainders.push(share - floor);
    }
    let leftover = instance.item_count() - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (Reverse(remainders[i].clone()), Reverse(instance.entitlement(i).clone()), i));
    for &i in order.iter().take(leftover) {
        counts[i] += 1;
    }
    counts
}

/// Items in index order are dealt out in consecutive runs, agents by
/// descending entitlement, each agent taking its [`proportional_counts`] entry.
pub fn proportional_count_allocation(instance: &Instance) -> Allocation {
    let counts = proportional_counts(instance);
    let mut bundles = vec![BTreeSet::new(); instance.agent_count()];
    let mut next = 0;
    for agent in entitlement_order(instance) {
        bundles[agent].extend(next..next + counts[agent]);
        next += counts[agent];
    }
    Allocation::new(bundles, instance.item_count()).expect("runs are disjoint and in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Counterexample,
    Example1,
    StochasticAgents,
    StochasticItems,
    Bids,
}

impl Family {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(text.to_string()))
            .map_err(|_| Error::InvalidGenerator(format!("unknown family '{text}'")))
    }
}

/// Declarative description of a generated instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Rational>,
    #[serde(default)]
    pub distributions: Vec<Distribution>,
    #[serde(default)]
    pub entitlements: EntitlementProfile,
    #[serde(default)]
    pub seed: u64,
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let text = Option::<crate::num::NumberText>::deserialize(d)?;
        text.map(|t| parse_rational(&t.0).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Builds the instance described by `spec`. The bids family needs `pool`.
pub fn generate(spec: &GeneratorSpec, pool: Option<&BidPool>) -> Result<Instance> {
    let entitlements = || spec.entitlements.entitlements(spec.n, crate::rng::derive_seed(spec.seed, 1));
    let dists = || {
        if spec.distributions.is_empty() {
            vec![Distribution::default()]
        } else {
            spec.distributions.clone()
        }
    };
    let need_n = || {
        if spec.n == 0 {
            Err(Error::InvalidGenerator("n must be at least 1".into()))
        } else {
            Ok(())
        }
    };
    match spec.family {
        Family::Counterexample => {
            let eps = spec
                .epsilon
                .as_ref()
                .ok_or_else(|| Error::InvalidGenerator("counterexample needs epsilon".into()))?;
            counterexample(spec.n, eps)
        }
        Family::Example1 => Ok(example1().instance),
        Family::StochasticAgents => {
            need_n()?;
            stochastic_agents(spec.m, &dists(), entitlements(), spec.seed)
        }
        Family::StochasticItems => {
            need_n()?;
            stochastic_items(spec.m, &dists(), entitlements(), spec.seed)
        }
        Family::Bids => {
            need_n()?;
            let pool = pool.ok_or_else(|| Error::InvalidGenerator("bids family needs a bid file".into()))?;
            instance_from_bids(pool, entitlements(), spec.m, spec.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fairness_score;
    use crate::num::to_f64;

    #[test]
    fn counterexample_layout() {
        let inst = counterexample(3, &ratio(1, 100)).unwrap();
        assert_eq!(inst.item_count(), 5);
        assert_eq!(inst.entitlements(), &[ratio(1, 100), ratio(1, 100), ratio(49, 50)]);
        assert_eq!(*inst.value(2, 0), ratio(49, 150));
        assert_eq!(*inst.value(0, 2), ratio(49, 50));
        assert_eq!(*inst.value(0, 3), int(0));
        assert_eq!(*inst.value(2, 4), ratio(1, 100));
        for i in 0..3 {
            assert_eq!(inst.total_value(i), int(1));
        }
        let small = counterexample(2, &ratio(1, 4)).unwrap();
        assert_eq!(small.item_count(), 3);
    }

    #[test]
    fn counterexample_rejects_bad_epsilon() {
        assert!(counterexample(3, &ratio(1, 2)).is_err());
        assert!(counterexample(3, &int(0)).is_err());
        assert!(counterexample(1, &ratio(1, 10)).is_err());
    }

    #[test]
    fn example1_fixture() {
        let ex = example1();
        assert_eq!(fairness_score(&ex.instance, 0, &ex.allocation_a).unwrap(), ex.fairness_a);
        assert_eq!(fairness_score(&ex.instance, 0, &ex.allocation_a_prime).unwrap(), ex.fairness_a_prime);
        assert_eq!(ex.instance.total_value(0), int(24));
    }

    #[test]
    fn distributions_parse_and_validate() {
        assert_eq!(
            Distribution::parse("uniform:0,1").unwrap(),
            Distribution::uniform(int(0), int(1))
        );
        assert_eq!(Distribution::parse("point:1/2").unwrap(), Distribution::PointMass { value: ratio(1, 2) });
        assert!(Distribution::parse("uniform:0,2").is_err());
        assert!(Distribution::parse("gauss:0,1").is_err());
        assert!(Distribution::parse("empirical:0.1,0.5").is_ok());
    }

    #[test]
    fn stochastic_seeded() {
        let d = [Distribution::default()];
        let a = stochastic_agents(6, &d, vec![int(1), int(1)], 5).unwrap();
        let b = stochastic_agents(6, &d, vec![int(1), int(1)], 5).unwrap();
        let c = stochastic_agents(6, &d, vec![int(1), int(1)], 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let point = [Distribution::PointMass { value: ratio(3, 4) }];
        let items = stochastic_items(4, &point, vec![int(1); 3], 1).unwrap();
        assert!(items.valuations().iter().all(|r| r == items.row(0)));
        assert!(items.valuations().iter().flatten().all(|v| *v == ratio(3, 4)));
    }

    #[test]
    fn uniform_sample_mean_is_sane() {
        for seed in 0..200 {
            let inst = stochastic_agents(6, &[Distribution::default()], vec![int(1), int(1)], seed).unwrap();
            let mean: f64 = inst.valuations().iter().flatten().map(to_f64).sum::<f64>() / 12.0;
            assert!((0.1..0.9).contains(&mean), "seed {seed}: {mean}");
        }
    }

    #[test]
    fn entitlements_are_positive_and_normalised() {
        assert_eq!(random_entitlements(1, 9), vec![int(1)]);
        let e = random_entitlements(5, 3);
        assert_eq!(e, random_entitlements(5, 3));
        assert!(e.iter().all(|x| x.is_positive()));
        assert_eq!(e.iter().sum::<Rational>(), int(1));
        assert_eq!(EntitlementProfile::Linear.entitlements(3, 0), vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)]);
    }

    #[test]
    fn proportional_counts_tie_rule() {
        let inst = Instance::new(vec![vec![int(1); 10]; 3], vec![ratio(1, 4), ratio(7, 20), ratio(2, 5)]).unwrap();
        assert_eq!(proportional_counts(&inst), vec![2, 4, 4]);
        let alloc = proportional_count_allocation(&inst);
        assert!(alloc.is_complete());
        // Agent 3 (largest entitlement) takes the first run of items.
        assert_eq!(alloc.bundle(2).iter().copied().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn generator_spec_round_trip() {
        let spec = GeneratorSpec {
            family: Family::Counterexample,
            n: 3,
            m: 5,
            epsilon: Some(ratio(1, 100)),
            distributions: vec![],
            entitlements: EntitlementProfile::Equal,
            seed: 1,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(generate(&spec, None).unwrap(), counterexample(3, &ratio(1, 100)).unwrap());
        assert_eq!(Family::parse("stochastic-items").unwrap(), Family::StochasticItems);
    }
}
