use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::support::{build_support_graph, Component, ComponentKind};
use super::FractionalAssignment;
use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::num::{serde_rational, Rational};

/// Per-agent evidence that rounding lost at most one item's worth of value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentCertificate {
    pub agent: usize,
    /// `e_i V_i(M)`.
    #[serde(with = "serde_rational")]
    pub proportional_share: Rational,
    #[serde(with = "serde_rational")]
    pub fractional_value: Rational,
    /// Largest single-item value for this agent.
    #[serde(with = "serde_rational")]
    pub max_item: Rational,
    #[serde(with = "serde_rational")]
    pub received: Rational,
    pub holds: bool,
}

/// Rounds a basic feasible point to an integral allocation. Each component of
/// the support graph is rooted at an agent and every item goes to its parent
/// agent, so an agent only gives up the item above it. A cycle is first broken
/// by handing its lowest-index item to whichever neighbouring cycle agent
/// values it more.
pub fn round_assignment(instance: &Instance, assignment: &FractionalAssignment) -> Result<Allocation> {
    super::check_shape(instance, assignment.weights())?;
    if !assignment.is_basic() {
        return Err(Error::InvalidAssignment("rounding needs a basic solution".into()));
    }
    let graph = build_support_graph(assignment)?;
    let n = instance.agent_count();
    let m = instance.item_count();
    let mut alloc = Allocation::empty(n, m);
    for component in &graph.components {
        round_component(instance, component, &mut alloc);
    }
    Ok(alloc)
}

fn round_component(instance: &Instance, component: &Component, alloc: &mut Allocation) {
    let n = instance.agent_count();
    let nodes = n + instance.item_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for &(i, j) in &component.edges {
        adj[i].push(n + j);
        adj[n + j].push(i);
    }
    let mut visited = vec![false; nodes];
    match component.kind {
        ComponentKind::Tree => {
            orient(component.agents[0], &adj, &mut visited, n, alloc);
        }
        ComponentKind::Unicyclic => {
            let cycle = cycle_nodes(component, &adj, n);
            let pivot = *cycle.iter().find(|&&u| u >= n).expect("bipartite cycle has items");
            let item = pivot - n;
            let mut ends: Vec<usize> = adj[pivot].iter().copied().filter(|u| cycle.contains(u)).collect();
            ends.sort_unstable();
            let (first, second) = (ends[0], ends[1]);
            let (keeper, other) = if instance.value(second, item) > instance.value(first, item) {
                (second, first)
            } else {
                (first, second)
            };
            alloc.assign(keeper, item);
            visited[pivot] = true;
            orient(other, &adj, &mut visited, n, alloc);
            let mut hanging = adj[pivot].clone();
            hanging.sort_unstable();
            for c in hanging {
                if !visited[c] {
                    orient(c, &adj, &mut visited, n, alloc);
                }
            }
        }
    }
}

/// BFS from `root` (an agent); each newly reached item goes to the agent it was
/// reached from.
fn orient(root: usize, adj: &[Vec<usize>], visited: &mut [bool], n: usize, alloc: &mut Allocation) {
    visited[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            if v >= n {
                alloc.assign(u, v - n);
            }
            queue.push_back(v);
        }
    }
}

/// Nodes on the unique cycle, found by repeatedly stripping leaves.
fn cycle_nodes(component: &Component, adj: &[Vec<usize>], n: usize) -> BTreeSet<usize> {
    let members: Vec<usize> = component
        .agents
        .iter()
        .copied()
        .chain(component.items.iter().map(|j| n + j))
        .collect();
    let mut degree: Vec<usize> = vec![0; adj.len()];
    for &u in &members {
        degree[u] = adj[u].len();
    }
    let mut removed = vec![false; adj.len()];
    let mut stack: Vec<usize> = members.iter().copied().filter(|&u| degree[u] <= 1).collect();
    while let Some(u) = stack.pop() {
        if removed[u] {
            continue;
        }
        removed[u] = true;
        for &v in &adj[u] {
            if !removed[v] {
                degree[v] -= 1;
                if degree[v] == 1 {
                    stack.push(v);
                }
            }
        }
    }
    members.into_iter().filter(|&u| !removed[u]).collect()
}

/// Certificates for `allocation` against the fractional point it came from.
pub fn rounding_certificate(
    instance: &Instance,
    assignment: &FractionalAssignment,
    allocation: &Allocation,
) -> Result<Vec<AgentCertificate>> {
    allocation.check_against(instance)?;
    (0..instance.agent_count())
        .map(|i| {
            let proportional_share = instance.total_value(i) * instance.entitlement(i);
            let fractional_value = assignment.fractional_value(instance, i);
            let max_item = instance.max_item_value(i);
            let received = instance.bundle_value(i, allocation.bundle(i))?;
            let holds = received >= &fractional_value - &max_item && received >= &proportional_share - &max_item;
            Ok(AgentCertificate {
                agent: i,
                proportional_share,
                fractional_value,
                max_item,
                received,
                holds,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::build_and_solve_lp;
    use crate::num::{int, ratio};

    #[test]
    fn identical_two_by_two() {
        let inst = Instance::new(vec![vec![int(1), int(1)], vec![int(1), int(1)]], vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let f = build_and_solve_lp(&inst).unwrap();
        let alloc = round_assignment(&inst, &f).unwrap();
        let cert = rounding_certificate(&inst, &f, &alloc).unwrap();
        assert!(cert.iter().all(|c| c.holds));
        assert!(cert.iter().all(|c| c.received >= int(0)));
    }

    #[test]
    fn single_agent_gets_all() {
        let inst = Instance::new(vec![vec![int(1), int(2), int(3)]], vec![int(1)]).unwrap();
        let f = build_and_solve_lp(&inst).unwrap();
        let alloc = round_assignment(&inst, &f).unwrap();
        assert_eq!(alloc.bundle(0).len(), 3);
    }

    #[test]
    fn cycle_is_broken_toward_higher_value() {
        // 2x2 cycle with item 0 valued higher by agent 1.
        let inst = Instance::new(vec![vec![int(1), int(3)], vec![int(3), int(1)]], vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let f = FractionalAssignment {
            weights: vec![vec![ratio(1, 2), ratio(1, 2)], vec![ratio(1, 2), ratio(1, 2)]],
            basic: true,
        };
        let alloc = round_assignment(&inst, &f).unwrap();
        assert_eq!(alloc.owner(0), Some(1));
        assert_eq!(alloc.owner(1), Some(0));
    }

    #[test]
    fn non_basic_rejected() {
        let inst = Instance::new(vec![vec![int(1)]], vec![int(1)]).unwrap();
        let f = FractionalAssignment::new(&inst, vec![vec![int(1)]]).unwrap();
        assert!(round_assignment(&inst, &f).is_ok());
        let g = FractionalAssignment { weights: vec![vec![int(1)]], basic: false };
        assert!(round_assignment(&inst, &g).is_err());
    }
}
