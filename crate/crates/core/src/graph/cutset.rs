//! Cutset selection: loop-cutsets (instantiating them renders the network
//! singly connected) and w-cutsets (removing them brings the moral graph's
//! induced width down to w), including nested w-cutset chains.

use std::collections::BTreeSet;

use crate::graph::{adjusted_induced_width, min_fill_ordering_subset, min_fill_run, moralize, Ordering, UndirectedGraph};
use crate::model::{Evidence, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutsetKind {
    Loop,
    WBounded(usize),
}

/// A certified cutset: member set plus the width evidence that justifies it.
#[derive(Debug, Clone)]
pub struct Cutset {
    pub members: BTreeSet<usize>,
    pub kind: CutsetKind,
    /// Adjusted induced width of the moral graph with members ∪ evidence
    /// removed.
    pub certified_width: usize,
    /// The ordering over the remaining variables that realizes
    /// `certified_width`.
    pub ordering: Ordering,
}

impl Cutset {
    /// Sampling-set size |C|.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The DAG's underlying undirected graph (arc directions dropped, no
/// co-parent marriages).
fn skeleton(net: &Network) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(net.num_variables());
    for cpt in &net.cpts {
        for &p in &cpt.parents {
            g.add_edge(p, cpt.child);
        }
    }
    g
}

/// True if the network minus `removed` is singly connected (its underlying
/// undirected graph is a forest).
pub fn is_singly_connected_without(net: &Network, removed: &BTreeSet<usize>) -> bool {
    let keep: BTreeSet<usize> = (0..net.num_variables()).filter(|v| !removed.contains(v)).collect();
    skeleton(net).is_forest_on(&keep)
}

fn certify(net: &Network, members: &BTreeSet<usize>, e: &Evidence, kind: CutsetKind) -> Cutset {
    let m = moralize(net);
    let mut removed = members.clone();
    removed.extend(e.variables());
    let subset: BTreeSet<usize> =
        (0..net.num_variables()).filter(|v| !removed.contains(v)).collect();
    let ordering = min_fill_ordering_subset(&m, &subset);
    Cutset { members: members.clone(), kind, certified_width: ordering.width, ordering }
}

/// Greedy loop-cutset selection.
///
/// Works on a shrinking copy of the DAG: evidence vertices are dropped once
/// their remaining in-degree is ≤ 1, chains and leaves are trimmed away, and
/// while a loop survives, a non-evidence vertex of in-degree ≤ 1 (preferring
/// vertices that lie on a cycle, then highest undirected degree, ties by
/// smallest index) is added to the cutset. Every removal under the
/// in-degree rule happens at a vertex with at most one incoming edge left,
/// so the first vertex any loop loses covers that loop at a non-sink
/// position — which is exactly the loop-cutset condition.
pub fn find_loop_cutset(net: &Network, e: &Evidence) -> Cutset {
    let n = net.num_variables();
    let mut present = vec![true; n];
    let mut members: BTreeSet<usize> = BTreeSet::new();

    let in_deg = |present: &[bool], v: usize| -> usize {
        net.parents(v).iter().filter(|&&p| present[p]).count()
    };
    let und_deg = |present: &[bool], v: usize| -> usize {
        in_deg(present, v) + net.children(v).iter().filter(|&&c| present[c]).count()
    };

    loop {
        // Fixpoint: drop low-in-degree evidence and trim degree-≤1 vertices.
        loop {
            let mut changed = false;
            for v in 0..n {
                if present[v] && e.contains(v) && in_deg(&present, v) <= 1 {
                    present[v] = false;
                    changed = true;
                }
            }
            for v in 0..n {
                if present[v] && und_deg(&present, v) <= 1 {
                    present[v] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let keep: BTreeSet<usize> = (0..n).filter(|&v| present[v]).collect();
        if skeleton(net).is_forest_on(&keep) {
            break;
        }

        let candidates: Vec<usize> =
            (0..n).filter(|&v| present[v] && !e.contains(v) && in_deg(&present, v) <= 1).collect();
        debug_assert!(!candidates.is_empty(), "a DAG always has an in-degree-0 vertex");
        let on_cycle = cycle_vertices(net, &present);
        let pool: Vec<usize> = {
            let restricted: Vec<usize> =
                candidates.iter().copied().filter(|v| on_cycle.contains(v)).collect();
            if restricted.is_empty() { candidates } else { restricted }
        };
        let pick = pool
            .into_iter()
            .max_by(|&a, &b| {
                und_deg(&present, a)
                    .cmp(&und_deg(&present, b))
                    .then(b.cmp(&a)) // ties: smaller index wins the max
            })
            .unwrap();
        members.insert(pick);
        present[pick] = false;
    }

    certify(net, &members, e, CutsetKind::Loop)
}

/// Vertices of the present subgraph that lie on some undirected cycle:
/// exactly those incident to a non-bridge edge.
fn cycle_vertices(net: &Network, present: &[bool]) -> BTreeSet<usize> {
    let n = present.len();
    let g = skeleton(net);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v) in g.edges() {
        if present[u] && present[v] {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    // Iterative bridge finding (Tarjan low-links with an explicit stack).
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut timer = 0usize;
    for start in 0..n {
        if !present[start] || disc[start] != usize::MAX {
            continue;
        }
        // Stack frames: (vertex, parent, next adjacency position).
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
        while let Some(&(v, parent, i)) = stack.last() {
            if i < adj[v].len() {
                stack.last_mut().unwrap().2 += 1;
                let to = adj[v][i];
                if to == parent {
                    // Skip the tree edge back to the parent; a simple graph
                    // holds it in the adjacency list exactly once.
                    continue;
                }
                if disc[to] == usize::MAX {
                    disc[to] = timer;
                    low[to] = timer;
                    timer += 1;
                    stack.push((to, v, 0));
                } else {
                    low[v] = low[v].min(disc[to]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                }
            }
        }
    }
    // Orient each edge from the earlier-discovered endpoint; it is a bridge
    // exactly when it is a tree edge with low[child] > disc[parent]. Back
    // edges always satisfy low[later] <= disc[earlier], so one condition
    // classifies everything.
    let mut out = BTreeSet::new();
    for u in 0..n {
        for &v in &adj[u] {
            if disc[u] < disc[v] && low[v] <= disc[u] {
                out.insert(u);
                out.insert(v);
            }
        }
    }
    out
}

/// Greedy w-cutset selection: while the min-fill decomposition of the moral
/// graph minus (members ∪ evidence) has a cluster larger than w+1, add the
/// variable that appears in the most oversized clusters (set-cover greedy,
/// ties by smallest index) and recompute the decomposition.
pub fn find_w_cutset(net: &Network, e: &Evidence, w: usize) -> Cutset {
    let n = net.num_variables();
    let m = moralize(net);
    let mut members: BTreeSet<usize> = BTreeSet::new();
    let mut removed: BTreeSet<usize> = e.variables().into_iter().collect();
    loop {
        let subset: BTreeSet<usize> = (0..n).filter(|v| !removed.contains(v)).collect();
        let (ordering, cliques) = min_fill_run(&m, &subset);
        if ordering.width <= w {
            return Cutset {
                members,
                kind: CutsetKind::WBounded(w),
                certified_width: ordering.width,
                ordering,
            };
        }
        let mut counts = vec![0usize; n];
        for clique in &cliques {
            if clique.len() > w + 1 {
                for &v in clique {
                    counts[v] += 1;
                }
            }
        }
        let pick = (0..n)
            .filter(|&v| subset.contains(&v))
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .expect("width > w implies an oversized cluster exists");
        debug_assert!(counts[pick] > 0);
        members.insert(pick);
        removed.insert(pick);
    }
}

/// Nested w-cutset chain C_1 ⊇ C_2 ⊇ … ⊇ C_wmax: C_1 comes from the greedy
/// search, and each C_{w+1} is obtained from C_w by deleting every member
/// (smallest index first) whose removal keeps the adjusted induced width
/// within w+1.
pub fn find_nested_w_cutsets(net: &Network, e: &Evidence, w_max: usize) -> Vec<Cutset> {
    let n = net.num_variables();
    let m = moralize(net);
    let evidence: BTreeSet<usize> = e.variables().into_iter().collect();
    let mut out = Vec::with_capacity(w_max);
    out.push(find_w_cutset(net, e, 1));
    for w in 2..=w_max {
        let mut members = out.last().unwrap().members.clone();
        let scan: Vec<usize> = members.iter().copied().collect();
        for v in scan {
            let mut trial: BTreeSet<usize> = members.iter().copied().collect();
            trial.remove(&v);
            trial.extend(evidence.iter().copied());
            if adjusted_induced_width(&m, &trial) <= w {
                members.remove(&v);
            }
        }
        let mut removed = members.clone();
        removed.extend(evidence.iter().copied());
        let subset: BTreeSet<usize> = (0..n).filter(|v| !removed.contains(v)).collect();
        let ordering = min_fill_ordering_subset(&m, &subset);
        debug_assert!(ordering.width <= w);
        out.push(Cutset {
            members,
            kind: CutsetKind::WBounded(w),
            certified_width: ordering.width,
            ordering,
        });
    }
    out
}
