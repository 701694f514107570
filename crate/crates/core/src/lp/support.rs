use std::collections::VecDeque;

use num_traits::Zero;
use serde::Serialize;

use super::FractionalAssignment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Tree,
    /// A tree plus one edge, i.e. exactly one cycle.
    Unicyclic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub agents: Vec<usize>,
    pub items: Vec<usize>,
    /// `(agent, item)` pairs with positive weight.
    pub edges: Vec<(usize, usize)>,
    pub kind: ComponentKind,
}

/// Bipartite graph with an edge `(i, j)` whenever `f[i][j] > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportGraph {
    pub agent_count: usize,
    pub item_count: usize,
    pub components: Vec<Component>,
    /// Items no agent holds any weight of.
    pub unweighted_items: Vec<usize>,
}

impl SupportGraph {
    pub fn edge_count(&self) -> usize {
        self.components.iter().map(|c| c.edges.len()).sum()
    }

    pub fn is_pseudoforest(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.edges.len() <= c.agents.len() + c.items.len())
    }
}

/// Builds the support graph of `assignment`, failing when some component has
/// more than one cycle.
pub fn build_support_graph(assignment: &FractionalAssignment) -> Result<SupportGraph> {
    let graph = support_components(assignment);
    if !graph.is_pseudoforest() {
        return Err(Error::InvalidAssignment(
            "support graph has a component with more than one cycle".into(),
        ));
    }
    Ok(graph)
}

/// Components without the pseudoforest check.
pub(crate) fn support_components(assignment: &FractionalAssignment) -> SupportGraph {
    let n = assignment.agent_count();
    let m = assignment.item_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for i in 0..n {
        for j in 0..m {
            if !assignment.weight(i, j).is_zero() {
                adj[i].push(n + j);
                adj[n + j].push(i);
            }
        }
    }
    let mut seen = vec![false; n + m];
    let mut components = Vec::new();
    for root in 0..n {
        if seen[root] || adj[root].is_empty() {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut agents = Vec::new();
        let mut items = Vec::new();
        let mut edges = Vec::new();
        while let Some(u) = queue.pop_front() {
            if u < n {
                agents.push(u);
            } else {
                items.push(u - n);
            }
            for &v in &adj[u] {
                if u < n {
                    edges.push((u, v - n));
                }
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        agents.sort_unstable();
        items.sort_unstable();
        edges.sort_unstable();
        let nodes = agents.len() + items.len();
        let kind = if edges.len() < nodes {
            ComponentKind::Tree
        } else {
            ComponentKind::Unicyclic
        };
        components.push(Component {
            agents,
            items,
            edges,
            kind,
        });
    }
    let unweighted_items = (0..m).filter(|&j| adj[n + j].is_empty()).collect();
    SupportGraph {
        agent_count: n,
        item_count: m,
        components,
        unweighted_items,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio, Rational};

    fn fa(weights: Vec<Vec<Rational>>) -> FractionalAssignment {
        FractionalAssignment { weights, basic: true }
    }

    #[test]
    fn star_is_a_tree() {
        let g = build_support_graph(&fa(vec![vec![int(1); 3]])).unwrap();
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.components[0].kind, ComponentKind::Tree);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn four_cycle_is_unicyclic() {
        let g = build_support_graph(&fa(vec![vec![ratio(1, 2); 2]; 2])).unwrap();
        assert_eq!(g.components[0].kind, ComponentKind::Unicyclic);
    }

    #[test]
    fn two_cycles_rejected() {
        // K_{2,3}: 6 edges on 5 nodes.
        assert!(build_support_graph(&fa(vec![vec![ratio(1, 2); 3]; 2])).is_err());
    }

    #[test]
    fn empty_and_unweighted() {
        let g = build_support_graph(&fa(vec![Vec::new(); 2])).unwrap();
        assert!(g.components.is_empty());
        let g = build_support_graph(&fa(vec![vec![int(1), int(0)], vec![int(0), int(0)]])).unwrap();
        assert_eq!(g.unweighted_items, vec![1]);
        assert_eq!(g.components.len(), 1);
    }
}
