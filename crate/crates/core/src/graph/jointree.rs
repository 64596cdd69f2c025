//! Join trees over the moral graph, built so a designated set of variables
//! is *conditioned*: treated as removed for width purposes but retained in
//! clusters as assignable slots.
//!
//! Construction eliminates the residual (unconditioned) variables along a
//! min-fill ordering of the residual subgraph while conditioned variables
//! stay in place and accumulate fill edges. Each residual elimination
//! produces a cluster whose residual part is a clique of the residual
//! subgraph and whose conditioned part is a set of slots; cluster tables
//! therefore range only over residual variables, so the memory cost is
//! governed by the residual width no matter how many slots are present.

use std::collections::BTreeSet;

use crate::graph::{min_fill_ordering_subset, moralize};
use crate::model::Network;

/// A join tree whose clusters mix residual variables (enumerated in tables)
/// with conditioned slot variables (fixed by assignment at query time).
#[derive(Debug, Clone)]
pub struct JoinTree {
    /// The conditioned (slot) variable set the tree was built for.
    pub conditioned: BTreeSet<usize>,
    /// Full variable set of each cluster, residual and slots together.
    pub clusters: Vec<BTreeSet<usize>>,
    /// Residual part of each cluster, sorted ascending.
    pub residual_parts: Vec<Vec<usize>>,
    /// Tree edges (u, v) with u < v.
    pub edges: Vec<(usize, usize)>,
    /// Full separator of each edge: intersection of the endpoint clusters.
    pub separators: Vec<BTreeSet<usize>>,
    /// CPT indices (child variable) attached to each cluster; every CPT is
    /// attached to exactly one cluster whose full set contains its family.
    pub attached: Vec<Vec<usize>>,
    /// Maximum number of clusters containing any single conditioned variable.
    pub delta: usize,
    /// Max residual cluster size minus one.
    pub residual_width: usize,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// A view of a join tree rooted at a chosen cluster.
#[derive(Debug, Clone)]
pub struct RootedTree {
    pub root: usize,
    /// Parent cluster of each cluster (root's parent is itself).
    pub parent: Vec<usize>,
    /// Depth-first preorder over clusters, children visited in index order.
    pub preorder: Vec<usize>,
    pub depth: Vec<usize>,
}

impl JoinTree {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Neighbors of a cluster as (cluster index, edge index) pairs, sorted
    /// by cluster index.
    pub fn neighbors(&self, c: usize) -> &[(usize, usize)] {
        &self.adjacency[c]
    }

    /// Clusters containing variable `v`, ascending.
    pub fn clusters_containing(&self, v: usize) -> Vec<usize> {
        (0..self.clusters.len()).filter(|&c| self.clusters[c].contains(&v)).collect()
    }

    pub fn rooted(&self, root: usize) -> RootedTree {
        let k = self.clusters.len();
        let mut parent = vec![usize::MAX; k];
        let mut depth = vec![0usize; k];
        let mut preorder = Vec::with_capacity(k);
        let mut stack = vec![root];
        parent[root] = root;
        while let Some(c) = stack.pop() {
            preorder.push(c);
            // Push in reverse so that smaller cluster indices pop first.
            for &(nb, _) in self.adjacency[c].iter().rev() {
                if parent[nb] == usize::MAX {
                    parent[nb] = c;
                    depth[nb] = depth[c] + 1;
                    stack.push(nb);
                }
            }
        }
        RootedTree { root, parent, preorder, depth }
    }

    /// Checks every structural invariant; returns a description of the
    /// first violation found.
    pub fn verify(&self, net: &Network) -> Result<(), String> {
        let k = self.clusters.len();
        if k == 0 {
            return Err("no clusters".into());
        }
        if self.edges.len() + 1 != k {
            return Err(format!("{} edges for {} clusters", self.edges.len(), k));
        }
        // Connectivity (with the right edge count this also implies acyclicity).
        let rooted = self.rooted(0);
        if rooted.preorder.len() != k {
            return Err("cluster graph is disconnected".into());
        }
        // Running intersection for every variable.
        for v in 0..net.num_variables() {
            let holders = self.clusters_containing(v);
            if holders.is_empty() {
                return Err(format!("variable {v} appears in no cluster"));
            }
            let inside: BTreeSet<usize> = holders.iter().copied().collect();
            let mut seen = BTreeSet::new();
            let mut stack = vec![holders[0]];
            seen.insert(holders[0]);
            while let Some(c) = stack.pop() {
                for &(nb, _) in &self.adjacency[c] {
                    if inside.contains(&nb) && seen.insert(nb) {
                        stack.push(nb);
                    }
                }
            }
            if seen.len() != holders.len() {
                return Err(format!("running intersection fails for variable {v}"));
            }
        }
        // Each CPT attached exactly once, inside a containing cluster.
        let mut seen_cpt = vec![false; net.num_variables()];
        for (c, list) in self.attached.iter().enumerate() {
            for &child in list {
                if seen_cpt[child] {
                    return Err(format!("CPT of {child} attached twice"));
                }
                seen_cpt[child] = true;
                let mut family: BTreeSet<usize> = net.parents(child).iter().copied().collect();
                family.insert(child);
                if !family.is_subset(&self.clusters[c]) {
                    return Err(format!("family of {child} not inside its cluster {c}"));
                }
            }
        }
        if seen_cpt.iter().any(|&b| !b) {
            return Err("some CPT is unattached".into());
        }
        // Separators are endpoint intersections.
        for (idx, &(u, v)) in self.edges.iter().enumerate() {
            let inter: BTreeSet<usize> =
                self.clusters[u].intersection(&self.clusters[v]).copied().collect();
            if inter != self.separators[idx] {
                return Err(format!("separator {idx} is not the endpoint intersection"));
            }
        }
        Ok(())
    }
}

/// Builds a join tree of the moral graph with `conditioned` variables kept
/// as slots. Residual cluster sizes are bounded by the residual min-fill
/// width plus one.
pub fn build_join_tree(net: &Network, conditioned: &BTreeSet<usize>) -> JoinTree {
    let n = net.num_variables();
    let m = moralize(net);
    let residual: BTreeSet<usize> = (0..n).filter(|v| !conditioned.contains(v)).collect();

    // Eliminate residual variables from the full moral graph along the
    // min-fill ordering of the residual subgraph; record the elimination
    // clique and a provisional parent (the clique of the earliest-eliminated
    // residual variable remaining in it) for each step.
    let mut cliques: Vec<BTreeSet<usize>> = Vec::new();
    let mut provisional_parent: Vec<Option<usize>> = Vec::new();
    let mut residual_width = 0usize;
    if !residual.is_empty() {
        let ordering = min_fill_ordering_subset(&m, &residual);
        residual_width = ordering.width;
        let sequence = ordering.elimination_sequence();
        let mut pos = vec![usize::MAX; n];
        for (idx, &v) in sequence.iter().enumerate() {
            pos[v] = idx;
        }
        let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|u| m.neighbors(u).clone()).collect();
        for &v in &sequence {
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
            let mut clique: BTreeSet<usize> = nbrs.iter().copied().collect();
            clique.insert(v);
            let up = nbrs.iter().copied().filter(|u| residual.contains(u)).min_by_key(|&u| pos[u]);
            provisional_parent.push(up.map(|u| pos[u]));
            cliques.push(clique);
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
            for &u in &nbrs {
                adj[u].remove(&v);
            }
            adj[v].clear();
        }
    } else {
        // Everything is conditioned: a single slot-only cluster carries all
        // the factors as a scalar product.
        cliques.push(BTreeSet::new());
        provisional_parent.push(None);
    }

    // Absorb non-maximal cliques into containing tree neighbors (edge
    // contraction, which preserves the tree shape and running intersection).
    let k = cliques.len();
    let mut adjc: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for (i, p) in provisional_parent.iter().enumerate() {
        if let Some(j) = *p {
            adjc[i].insert(j);
            adjc[j].insert(i);
        }
    }
    let mut alive = vec![true; k];
    loop {
        let mut changed = false;
        for i in (0..k).rev() {
            if !alive[i] {
                continue;
            }
            let target = adjc[i]
                .iter()
                .copied()
                .find(|&j| alive[j] && cliques[i].is_subset(&cliques[j]));
            if let Some(j) = target {
                alive[i] = false;
                changed = true;
                let nbrs: Vec<usize> = adjc[i].iter().copied().collect();
                for nb in nbrs {
                    adjc[nb].remove(&i);
                    if nb != j {
                        adjc[nb].insert(j);
                        adjc[j].insert(nb);
                    }
                }
                adjc[i].clear();
            }
        }
        if !changed {
            break;
        }
    }

    let mut newid = vec![usize::MAX; k];
    let mut clusters: Vec<BTreeSet<usize>> = Vec::new();
    for i in 0..k {
        if alive[i] {
            newid[i] = clusters.len();
            clusters.push(std::mem::take(&mut cliques[i]));
        }
    }
    let kk = clusters.len();
    let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..k {
        if alive[i] {
            for &j in &adjc[i] {
                let (a, b) = (newid[i], newid[j]);
                edge_set.insert((a.min(b), a.max(b)));
            }
        }
    }

    // Link forest components into one tree, chaining component
    // representatives in index order (separators may be empty).
    let mut adj2: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); kk];
    for &(a, b) in &edge_set {
        adj2[a].insert(b);
        adj2[b].insert(a);
    }
    let mut component = vec![usize::MAX; kk];
    let mut reps = Vec::new();
    for c in 0..kk {
        if component[c] != usize::MAX {
            continue;
        }
        let id = reps.len();
        reps.push(c);
        let mut stack = vec![c];
        component[c] = id;
        while let Some(x) = stack.pop() {
            for &y in &adj2[x] {
                if component[y] == usize::MAX {
                    component[y] = id;
                    stack.push(y);
                }
            }
        }
    }
    for w in reps.windows(2) {
        edge_set.insert((w[0].min(w[1]), w[0].max(w[1])));
        adj2[w[0]].insert(w[1]);
        adj2[w[1]].insert(w[0]);
    }

    // A family with a residual member always sits inside the elimination
    // clique of its first-eliminated residual member; a fully conditioned
    // family may be homeless and is grafted onto the most-overlapping
    // cluster as extra slots.
    for cpt in &net.cpts {
        let mut family: BTreeSet<usize> = cpt.parents.iter().copied().collect();
        family.insert(cpt.child);
        if clusters.iter().any(|c| family.is_subset(c)) {
            continue;
        }
        let mut target = 0;
        let mut best = usize::MAX;
        for (c, cluster) in clusters.iter().enumerate() {
            let overlap = cluster.intersection(&family).count();
            if best == usize::MAX || overlap > best {
                best = overlap;
                target = c;
            }
        }
        clusters[target].extend(family.iter().copied());
    }

    // Repair running intersection for conditioned variables: connect each
    // one's holder set through tree paths, adding it as a slot along the
    // way. Slots are free (they never enlarge a table).
    for &s in conditioned {
        let holders: Vec<usize> = (0..kk).filter(|&c| clusters[c].contains(&s)).collect();
        if holders.len() <= 1 {
            continue;
        }
        let m0 = holders[0];
        let mut parent = vec![usize::MAX; kk];
        parent[m0] = m0;
        let mut stack = vec![m0];
        while let Some(x) = stack.pop() {
            for &y in &adj2[x] {
                if parent[y] == usize::MAX {
                    parent[y] = x;
                    stack.push(y);
                }
            }
        }
        for &h in &holders[1..] {
            let mut cur = h;
            while cur != m0 {
                clusters[cur].insert(s);
                cur = parent[cur];
            }
        }
    }

    // Attach each CPT to the first cluster containing its family.
    let mut attached: Vec<Vec<usize>> = vec![Vec::new(); kk];
    for cpt in &net.cpts {
        let mut family: BTreeSet<usize> = cpt.parents.iter().copied().collect();
        family.insert(cpt.child);
        let c = (0..kk)
            .find(|&c| family.is_subset(&clusters[c]))
            .expect("every family has a home cluster by construction");
        attached[c].push(cpt.child);
    }

    let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
    let separators: Vec<BTreeSet<usize>> = edges
        .iter()
        .map(|&(u, v)| clusters[u].intersection(&clusters[v]).copied().collect())
        .collect();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); kk];
    for (idx, &(u, v)) in edges.iter().enumerate() {
        adjacency[u].push((v, idx));
        adjacency[v].push((u, idx));
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    let residual_parts: Vec<Vec<usize>> = clusters
        .iter()
        .map(|c| c.iter().copied().filter(|v| residual.contains(v)).collect())
        .collect();
    debug_assert!(
        residual.is_empty()
            || residual_parts.iter().map(|p| p.len()).max().unwrap_or(0) == residual_width + 1
    );
    let delta = conditioned
        .iter()
        .map(|&s| (0..kk).filter(|&c| clusters[c].contains(&s)).count())
        .max()
        .unwrap_or(0);

    JoinTree {
        conditioned: conditioned.clone(),
        clusters,
        residual_parts,
        edges,
        separators,
        attached,
        delta,
        residual_width,
        adjacency,
    }
}
