//! Neighbor sets, the visibility graph and its connected components.
//!
//! Two agents see each other when their distance is at most `V`; the
//! boundary is inclusive. Graphs are rebuilt from scratch every step with a
//! plain pairwise scan, which is exact and cheap for the swarm sizes used
//! here. Because the engine is deterministic, a pair sitting exactly on the
//! boundary is classified identically on every replay of the same seed.

use crate::geometry::{distance, Position, SwarmState};

/// Ids of the agents visible from agent `i`, in increasing order.
pub fn neighbor_set(s: &SwarmState, i: usize, visibility: f64) -> Vec<usize> {
    neighbors_of(&s.positions, i, visibility)
}

pub(crate) fn neighbors_of(positions: &[Position], i: usize, visibility: f64) -> Vec<usize> {
    let pi = positions[i];
    positions
        .iter()
        .enumerate()
        .filter(|&(j, pj)| j != i && distance(pi, *pj) <= visibility)
        .map(|(j, _)| j)
        .collect()
}

/// Undirected graph with an edge between every pair of mutually visible agents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisibilityGraph {
    n: usize,
    /// Sorted `(i, j)` pairs with `i < j`.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl VisibilityGraph {
    /// Builds a graph from an explicit edge list. Self-loops are dropped and
    /// duplicates merged.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut normalized: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|&(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .inspect(|&(_, b)| assert!(b < n, "edge endpoint {b} out of range for {n} nodes"))
            .collect();
        normalized.sort_unstable();
        normalized.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &normalized {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            n,
            edges: normalized,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn components(&self) -> ComponentPartition {
        let mut dsu = DisjointSet::new(self.n);
        for &(a, b) in &self.edges {
            dsu.union(a, b);
        }
        // Relabel roots in order of first appearance so labels are canonical.
        let mut root_label = vec![usize::MAX; self.n];
        let mut labels = Vec::with_capacity(self.n);
        let mut sizes = Vec::new();
        for i in 0..self.n {
            let root = dsu.find(i);
            if root_label[root] == usize::MAX {
                root_label[root] = sizes.len();
                sizes.push(0);
            }
            let label = root_label[root];
            sizes[label] += 1;
            labels.push(label);
        }
        ComponentPartition {
            labels,
            component_sizes: sizes,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components().count() <= 1
    }
}

pub fn build_graph(s: &SwarmState, visibility: f64) -> VisibilityGraph {
    graph_of(&s.positions, visibility)
}

pub(crate) fn graph_of(positions: &[Position], visibility: f64) -> VisibilityGraph {
    let n = positions.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if distance(positions[i], positions[j]) <= visibility {
                edges.push((i, j));
            }
        }
    }
    VisibilityGraph::from_edges(n, edges)
}

pub fn components(g: &VisibilityGraph) -> ComponentPartition {
    g.components()
}

pub fn is_connected(g: &VisibilityGraph) -> bool {
    g.is_connected()
}

/// Connected-component labelling of the agents.
///
/// Labels are numbered by first appearance when scanning agent ids upward,
/// so agent 0 is always in component 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPartition {
    pub labels: Vec<usize>,
    pub component_sizes: Vec<usize>,
}

impl ComponentPartition {
    pub fn count(&self) -> usize {
        self.component_sizes.len()
    }

    /// Label of the largest component; ties go to the lowest label.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (label, &size) in self.component_sizes.iter().enumerate() {
            if best.is_none_or(|b| size > self.component_sizes[b]) {
                best = Some(label);
            }
        }
        best
    }

    pub fn largest_size(&self) -> usize {
        self.largest().map_or(0, |l| self.component_sizes[l])
    }

    pub fn members(&self, label: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Clone, Debug)]
struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] = self.rank[a].saturating_add(1);
        }
    }
}
