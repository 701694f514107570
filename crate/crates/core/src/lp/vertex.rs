//! Moving a feasible point of the relaxation to a vertex.
//!
//! A feasible point is a vertex exactly when the columns of its positive
//! weights, restricted to the tight constraints, are linearly independent.
//! Each column has at most two non-zeros (its item row and its agent row), so
//! the columns form a graph with "gains" on the agent side. Independence fails
//! when a connected piece of that graph carries two cyclic elements (a cycle
//! or a half-edge hanging on a non-tight constraint), or a single cycle whose
//! gains balance. In either case a small null-space direction exists and the
//! point is moved along it until a weight vanishes or a constraint becomes
//! tight. Each move strictly reduces `#positive weights - #tight constraints`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Signed, Zero};

use crate::model::Instance;
use crate::num::Rational;

type Edge = (usize, usize);

struct Point<'a> {
    instance: &'a Instance,
    f: Vec<Vec<Rational>>,
    item_sum: Vec<Rational>,
    agent_sum: Vec<Rational>,
    target: Vec<Rational>,
}

enum Element {
    /// Edge attached only at `node`.
    Half { edge: usize, node: usize },
    /// Non-tree edge between two discovered nodes.
    Chord { edge: usize, from: usize, to: usize },
}

struct Forest {
    parent: Vec<usize>,
    parent_edge: Vec<Option<usize>>,
    depth: Vec<usize>,
}

impl Forest {
    fn path(&self, mut a: usize, mut b: usize) -> Vec<usize> {
        let mut edges = Vec::new();
        while self.depth[a] > self.depth[b] {
            edges.push(self.parent_edge[a].expect("non-root has parent"));
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            edges.push(self.parent_edge[b].expect("non-root has parent"));
            b = self.parent[b];
        }
        while a != b {
            edges.push(self.parent_edge[a].expect("non-root has parent"));
            edges.push(self.parent_edge[b].expect("non-root has parent"));
            a = self.parent[a];
            b = self.parent[b];
        }
        edges
    }
}

impl<'a> Point<'a> {
    fn new(instance: &'a Instance, f: Vec<Vec<Rational>>) -> Self {
        let n = instance.agent_count();
        let m = instance.item_count();
        let item_sum = (0..m).map(|j| f.iter().map(|row| &row[j]).sum()).collect();
        let agent_sum = (0..n)
            .map(|i| instance.row(i).iter().zip(&f[i]).map(|(v, w)| v * w).sum())
            .collect();
        let target = (0..n)
            .map(|i| instance.total_value(i) * instance.entitlement(i))
            .collect();
        Point {
            instance,
            f,
            item_sum,
            agent_sum,
            target,
        }
    }

    fn n(&self) -> usize {
        self.instance.agent_count()
    }

    /// Agent `i` is node `i`, item `j` is node `n + j`. Returns the coefficient
    /// of edge `(i, j)` in each tight row it touches.
    fn attachments(&self, (i, j): Edge, agent_tight: &[bool], item_tight: &[bool]) -> Vec<(usize, Rational)> {
        let mut out = Vec::with_capacity(2);
        let v = self.instance.value(i, j);
        if agent_tight[i] && !v.is_zero() {
            out.push((i, v.clone()));
        }
        if item_tight[j] {
            out.push((self.n() + j, Rational::one()));
        }
        out
    }

    fn find_dependency(&self) -> Option<Vec<(Edge, Rational)>> {
        let n = self.n();
        let m = self.instance.item_count();
        let one = Rational::one();
        let agent_tight: Vec<bool> = (0..n).map(|i| self.agent_sum[i] == self.target[i]).collect();
        let item_tight: Vec<bool> = (0..m).map(|j| self.item_sum[j] == one).collect();

        let mut edges: Vec<Edge> = Vec::new();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + m];
        let mut half: Vec<Vec<usize>> = vec![Vec::new(); n + m];
        for i in 0..n {
            for j in 0..m {
                if !self.f[i][j].is_positive() {
                    continue;
                }
                let e = edges.len();
                edges.push((i, j));
                let at = self.attachments((i, j), &agent_tight, &item_tight);
                match at.as_slice() {
                    [] => return Some(vec![((i, j), one)]),
                    [(node, _)] => half[*node].push(e),
                    [(a, _), (b, _)] => {
                        adj[*a].push((e, *b));
                        adj[*b].push((e, *a));
                    }
                    _ => unreachable!("at most two rows per column"),
                }
            }
        }

        let nodes = n + m;
        let mut forest = Forest {
            parent: (0..nodes).collect(),
            parent_edge: vec![None; nodes],
            depth: vec![0; nodes],
        };
        let mut seen = vec![false; nodes];
        let mut edge_seen = vec![false; edges.len()];
        for root in 0..nodes {
            if seen[root] || (adj[root].is_empty() && half[root].is_empty()) {
                continue;
            }
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            let mut elements: Vec<Element> = Vec::new();
            'bfs: while let Some(u) = queue.pop_front() {
                for &e in &half[u] {
                    elements.push(Element::Half { edge: e, node: u });
                    if elements.len() >= 2 {
                        break 'bfs;
                    }
                }
                for &(e, v) in &adj[u] {
                    if edge_seen[e] {
                        continue;
                    }
                    edge_seen[e] = true;
                    if !seen[v] {
                        seen[v] = true;
                        forest.parent[v] = u;
                        forest.parent_edge[v] = Some(e);
                        forest.depth[v] = forest.depth[u] + 1;
                        queue.push_back(v);
                    } else {
                        elements.push(Element::Chord { edge: e, from: u, to: v });
                        if elements.len() >= 2 {
                            break 'bfs;
                        }
                    }
                }
            }
            let subset: Option<BTreeSet<usize>> = match elements.as_slice() {
                [first, second, ..] => {
                    let (mut set, a) = self.element_edges(first, &forest);
                    let (more, b) = self.element_edges(second, &forest);
                    set.extend(more);
                    set.extend(forest.path(a, b));
                    Some(set)
                }
                [Element::Chord { .. }] => Some(self.element_edges(&elements[0], &forest).0),
                _ => None,
            };
            if let Some(subset) = subset {
                let chosen: Vec<Edge> = subset.iter().map(|&e| edges[e]).collect();
                if let Some(d) = self.null_direction(&chosen, &agent_tight, &item_tight) {
                    return Some(d);
                }
                debug_assert!(elements.len() < 2, "two cyclic elements always give a dependency");
            }
            // A BFS cut short by two elements always returned above.
        }
        None
    }

    fn element_edges(&self, element: &Element, forest: &Forest) -> (BTreeSet<usize>, usize) {
        match *element {
            Element::Half { edge, node } => (BTreeSet::from([edge]), node),
            Element::Chord { edge, from, to } => {
                let mut set: BTreeSet<usize> = forest.path(from, to).into_iter().collect();
                set.insert(edge);
                (set, from)
            }
        }
    }

    /// Non-zero vector `d` on `edges` with `A_tight d = 0`, if one exists.
    fn null_direction(
        &self,
        edges: &[Edge],
        agent_tight: &[bool],
        item_tight: &[bool],
    ) -> Option<Vec<(Edge, Rational)>> {
        let mut row_of: BTreeMap<usize, usize> = BTreeMap::new();
        let columns: Vec<Vec<(usize, Rational)>> = edges
            .iter()
            .map(|&e| {
                self.attachments(e, agent_tight, item_tight)
                    .into_iter()
                    .map(|(node, c)| {
                        let next = row_of.len();
                        (*row_of.entry(node).or_insert(next), c)
                    })
                    .collect()
            })
            .collect();
        let x = null_vector(row_of.len(), &columns)?;
        Some(edges.iter().copied().zip(x).filter(|(_, v)| !v.is_zero()).collect())
    }

    /// Moves along `direction` (or its negation) as far as feasibility allows.
    fn step(&mut self, direction: &[(Edge, Rational)]) {
        let one = Rational::one();
        let mut item_delta: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut agent_delta: BTreeMap<usize, Rational> = BTreeMap::new();
        for ((i, j), d) in direction {
            *item_delta.entry(*j).or_insert_with(Rational::zero) += d;
            *agent_delta.entry(*i).or_insert_with(Rational::zero) += self.instance.value(*i, *j) * d;
        }
        let limit = |sign: &Rational| -> Option<Rational> {
            let mut best: Option<Rational> = None;
            let mut consider = |t: Rational| {
                if best.as_ref().is_none_or(|b| t < *b) {
                    best = Some(t);
                }
            };
            for ((i, j), d) in direction {
                let d = d * sign;
                if d.is_negative() {
                    consider(&self.f[*i][*j] / -d);
                }
            }
            for (j, d) in &item_delta {
                let d = d * sign;
                if d.is_positive() && self.item_sum[*j] < one {
                    consider((&one - &self.item_sum[*j]) / d);
                }
            }
            for (i, d) in &agent_delta {
                let d = d * sign;
                if d.is_negative() && self.agent_sum[*i] > self.target[*i] {
                    consider((&self.agent_sum[*i] - &self.target[*i]) / -d);
                }
            }
            best
        };
        let forward = Rational::one();
        let backward = -Rational::one();
        let (sign, t) = match limit(&forward) {
            Some(t) => (forward, t),
            None => (backward.clone(), limit(&backward).expect("relaxation polytope is bounded")),
        };
        let scale = &sign * &t;
        for ((i, j), d) in direction {
            let delta = d * &scale;
            self.f[*i][*j] += &delta;
        }
        for (j, d) in item_delta {
            self.item_sum[j] += d * &scale;
        }
        for (i, d) in agent_delta {
            self.agent_sum[i] += d * &scale;
        }
    }
}

/// Some non-zero solution of `M x = 0`, where column `c` of `M` is given
/// sparsely. Sparse elimination, always pivoting on a shortest remaining row;
/// the matrices here are incidence-like, so fill-in stays small.
pub(crate) fn null_vector(rows: usize, columns: &[Vec<(usize, Rational)>]) -> Option<Vec<Rational>> {
    let cols = columns.len();
    let mut row_entries: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); rows];
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cols];
    for (c, entries) in columns.iter().enumerate() {
        for (r, v) in entries {
            let slot = row_entries[*r].entry(c).or_insert_with(Rational::zero);
            *slot += v;
            if slot.is_zero() {
                row_entries[*r].remove(&c);
                col_rows[c].remove(r);
            } else {
                col_rows[c].insert(*r);
            }
        }
    }
    let mut active: BTreeSet<usize> = (0..rows).collect();
    let mut pivots: Vec<(usize, BTreeMap<usize, Rational>)> = Vec::new();
    let mut is_pivot = vec![false; cols];
    while let Some(&r) = active.iter().min_by_key(|&&r| (row_entries[r].len(), r)) {
        active.remove(&r);
        if row_entries[r].is_empty() {
            continue;
        }
        let c = *row_entries[r]
            .keys()
            .min_by_key(|&&c| (col_rows[c].len(), c))
            .expect("row is non-empty");
        let mut pivot = std::mem::take(&mut row_entries[r]);
        let inv = pivot[&c].recip();
        for v in pivot.values_mut() {
            *v *= &inv;
        }
        for k in pivot.keys() {
            col_rows[*k].remove(&r);
        }
        let others: Vec<usize> = col_rows[c].iter().copied().collect();
        for r2 in others {
            let factor = row_entries[r2][&c].clone();
            for (k, pv) in &pivot {
                let slot = row_entries[r2].entry(*k).or_insert_with(Rational::zero);
                *slot -= &factor * pv;
                if slot.is_zero() {
                    row_entries[r2].remove(k);
                    col_rows[*k].remove(&r2);
                } else {
                    col_rows[*k].insert(r2);
                }
            }
        }
        is_pivot[c] = true;
        pivots.push((c, pivot));
    }
    let free = (0..cols).find(|&c| !is_pivot[c])?;
    let mut x = vec![Rational::zero(); cols];
    x[free] = Rational::one();
    for (c, pivot) in pivots.iter().rev() {
        let mut acc = Rational::zero();
        for (k, v) in pivot {
            if k != c && !x[*k].is_zero() {
                acc -= v * &x[*k];
            }
        }
        x[*c] = acc;
    }
    Some(x)
}

pub(crate) fn is_vertex(instance: &Instance, weights: &[Vec<Rational>]) -> bool {
    Point::new(instance, weights.to_vec()).find_dependency().is_none()
}

/// Walks from `f[i][j] = e_i` to a vertex, one item at a time: item `j` joins
/// with its proportional column (which keeps every row tight or slack as
/// before) and the point is purified before the next item arrives. Points
/// then stay close to vertices, which keeps the rationals small.
pub(crate) fn crossover_from_proportional(instance: &Instance) -> Vec<Vec<Rational>> {
    let n = instance.agent_count();
    let m = instance.item_count();
    let mut point = Point {
        instance,
        f: vec![vec![Rational::zero(); m]; n],
        item_sum: vec![Rational::zero(); m],
        agent_sum: vec![Rational::zero(); n],
        target: vec![Rational::zero(); n],
    };
    for j in 0..m {
        for i in 0..n {
            let e = instance.entitlement(i);
            let gain = instance.value(i, j) * e;
            point.f[i][j] = e.clone();
            point.agent_sum[i] += &gain;
            point.target[i] += gain;
        }
        point.item_sum[j] = Rational::one();
        while let Some(direction) = point.find_dependency() {
            point.step(&direction);
        }
    }
    point.f
}
