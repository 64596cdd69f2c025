//! Undirected graph machinery: moral graphs, elimination orderings, induced
//! width, join trees, and cutset selection.
//!
//! Widths follow the ordered-graph convention: an ordering lists the nodes
//! `x_1..x_n` and is processed from last to first, connecting each node's
//! earlier neighbors; the induced width is the largest earlier-neighbor count
//! seen. Equivalently, the reverse of the ordering is an elimination
//! sequence and the width is the largest elimination degree.

pub mod cutset;
pub mod jointree;

use std::collections::BTreeSet;

use crate::model::Network;

/// A simple undirected graph over dense node indices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        UndirectedGraph { adj: vec![BTreeSet::new(); n] }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn neighbors(&self, u: usize) -> &BTreeSet<usize> {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// All edges as ordered pairs (u < v), sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.adj.len() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// True if the graph (restricted to `keep`) contains no cycle.
    pub fn is_forest_on(&self, keep: &BTreeSet<usize>) -> bool {
        // Union-find over the kept nodes.
        let n = self.adj.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &u in keep {
            for &v in &self.adj[u] {
                if v > u && keep.contains(&v) {
                    let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                    if ru == rv {
                        return false;
                    }
                    parent[ru] = rv;
                }
            }
        }
        true
    }

    pub fn is_forest(&self) -> bool {
        self.is_forest_on(&(0..self.adj.len()).collect())
    }
}

/// The moral graph: every directed edge undirected, plus an edge between
/// every pair of co-parents.
pub fn moralize(net: &Network) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(net.num_variables());
    for cpt in &net.cpts {
        for &p in &cpt.parents {
            g.add_edge(p, cpt.child);
        }
        for (i, &p) in cpt.parents.iter().enumerate() {
            for &q in &cpt.parents[i + 1..] {
                g.add_edge(p, q);
            }
        }
    }
    g
}

/// An ordering of (a subset of) a graph's nodes together with its induced
/// width. `order` is in processed-last-to-first convention; the reverse of
/// `order` is the elimination sequence that realizes `width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    pub order: Vec<usize>,
    pub width: usize,
}

impl Ordering {
    /// The elimination sequence (first-eliminated node first).
    pub fn elimination_sequence(&self) -> Vec<usize> {
        self.order.iter().rev().copied().collect()
    }
}

/// Min-fill elimination ordering over all nodes: at each step eliminate the
/// node whose elimination adds the fewest fill edges, ties broken by
/// smallest index.
pub fn min_fill_ordering(g: &UndirectedGraph) -> Ordering {
    min_fill_ordering_subset(g, &(0..g.num_nodes()).collect())
}

/// Min-fill ordering over the subgraph induced by `subset`. Edges leaving
/// the subset are ignored; the returned ordering covers `subset` only.
pub fn min_fill_ordering_subset(g: &UndirectedGraph, subset: &BTreeSet<usize>) -> Ordering {
    min_fill_run(g, subset).0
}

/// Min-fill elimination over `subset`, returning both the ordering and the
/// elimination cliques (eliminated node plus its neighbors at elimination
/// time), in elimination order.
pub(crate) fn min_fill_run(
    g: &UndirectedGraph,
    subset: &BTreeSet<usize>,
) -> (Ordering, Vec<BTreeSet<usize>>) {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.num_nodes()];
    for &u in subset {
        for &v in g.neighbors(u) {
            if subset.contains(&v) {
                adj[u].insert(v);
            }
        }
    }
    let mut active = subset.clone();
    let mut elimination = Vec::with_capacity(subset.len());
    let mut cliques = Vec::with_capacity(subset.len());
    let mut width = 0usize;
    while !active.is_empty() {
        let mut best = usize::MAX;
        let mut best_fill = usize::MAX;
        for &v in &active {
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
            let mut fill = 0;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if !adj[a].contains(&b) {
                        fill += 1;
                    }
                }
            }
            if fill < best_fill {
                best_fill = fill;
                best = v;
            }
        }
        let nbrs: Vec<usize> = adj[best].iter().copied().collect();
        width = width.max(nbrs.len());
        let mut clique: BTreeSet<usize> = nbrs.iter().copied().collect();
        clique.insert(best);
        cliques.push(clique);
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &u in &nbrs {
            adj[u].remove(&best);
        }
        adj[best].clear();
        active.remove(&best);
        elimination.push(best);
    }
    elimination.reverse();
    (Ordering { order: elimination, width }, cliques)
}

/// Induced width of `g` along the full node ordering `order` (a permutation
/// of all nodes): processing nodes from last to first, each node's earlier
/// neighbors are counted and connected.
pub fn induced_width(g: &UndirectedGraph, order: &[usize]) -> usize {
    let n = g.num_nodes();
    assert_eq!(order.len(), n, "ordering must be a permutation of all nodes");
    let mut pos = vec![usize::MAX; n];
    for (k, &v) in order.iter().enumerate() {
        assert_eq!(pos[v], usize::MAX, "ordering must be a permutation of all nodes");
        pos[v] = k;
    }
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|u| g.neighbors(u).clone()).collect();
    let mut width = 0usize;
    for k in (0..n).rev() {
        let v = order[k];
        let earlier: Vec<usize> = adj[v].iter().copied().filter(|&u| pos[u] < k).collect();
        width = width.max(earlier.len());
        for (i, &a) in earlier.iter().enumerate() {
            for &b in &earlier[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    width
}

/// Induced width of `g`, under a fresh min-fill ordering, after deleting
/// `removed` and all incident edges. Removing every node yields 0.
pub fn adjusted_induced_width(g: &UndirectedGraph, removed: &BTreeSet<usize>) -> usize {
    let subset: BTreeSet<usize> = (0..g.num_nodes()).filter(|v| !removed.contains(v)).collect();
    if subset.is_empty() {
        return 0;
    }
    min_fill_ordering_subset(g, &subset).width
}
