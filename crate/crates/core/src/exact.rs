//! Exact inference over conditioned join trees.
//!
//! One engine serves two callers. For plain join-tree inference the
//! conditioned set is the evidence and a single propagation yields the
//! evidence probability and all posterior marginals. For cutset-based
//! methods the conditioned set also contains the cutset, whose values change
//! between queries; directed messages are cached per edge and recomputed
//! only when an assignment change reaches the part of the tree they
//! summarize, so the cost of flipping one variable is proportional to how
//! much of the tree actually saw the change.

use std::collections::BTreeSet;

use crate::error::InferenceError;
use crate::graph::jointree::{build_join_tree, JoinTree};
use crate::model::{Evidence, Marginals, Network};

/// Cap on entries in any single residual cluster table.
pub const ENGINE_TABLE_CAP: u64 = 1 << 24;
/// Cap on the number of conditioning assignments [`cutset_conditioning`]
/// will enumerate.
pub const CUTSET_ENUM_CAP: u64 = 1 << 20;

/// A table over a sorted list of variables. The first scope variable is the
/// most significant digit of the flat index, the last one the fastest.
#[derive(Debug, Clone)]
pub struct ClusterFunction {
    pub scope: Vec<usize>,
    pub values: Vec<f64>,
}

impl ClusterFunction {
    /// Sums the table down to a single scope variable.
    pub fn marginal_onto(&self, net: &Network, var: usize) -> Vec<f64> {
        let pos = self.scope.binary_search(&var).expect("variable not in scope");
        let cards: Vec<usize> = self.scope.iter().map(|&v| net.cardinality(v)).collect();
        let mut out = vec![0.0; cards[pos]];
        let mut assign = vec![0usize; self.scope.len()];
        for &p in &self.values {
            out[assign[pos]] += p;
            increment(&mut assign, &cards);
        }
        out
    }
}

/// Advances `assign` odometer-style, the last position moving fastest.
fn increment(assign: &mut [usize], cards: &[usize]) {
    for pos in (0..assign.len()).rev() {
        assign[pos] += 1;
        if assign[pos] < cards[pos] {
            return;
        }
        assign[pos] = 0;
    }
}

/// Flat index of the sub-assignment at `positions`, first position most
/// significant.
fn project(assign: &[usize], cards: &[usize], positions: &[usize]) -> usize {
    let mut idx = 0;
    for &p in positions {
        idx = idx * cards[p] + assign[p];
    }
    idx
}

#[derive(Debug, Clone)]
struct MessageSlot {
    valid: bool,
    /// Normalized table over the edge's residual separator.
    table: Vec<f64>,
    /// ln of the mass divided out of this message, plus the log-masses of
    /// the messages it consumed.
    log_norm: f64,
    /// The unnormalized message was identically zero: the source-side
    /// subtree is inconsistent with the current assignment.
    zero: bool,
}

/// Join-tree propagation with assignable conditioned variables and cached
/// directed messages.
pub struct ConditionedEngine<'a> {
    net: &'a Network,
    tree: &'a JoinTree,
    /// Current value of each conditioned variable (indexed by variable).
    values: Vec<Option<usize>>,
    /// Cluster potentials over residual scopes; dropped when a conditioned
    /// variable they mention changes, rebuilt on demand.
    contents: Vec<Option<ClusterFunction>>,
    /// Two slots per tree edge: index `2e` for u→v, `2e + 1` for v→u where
    /// the edge is stored as (u, v).
    messages: Vec<MessageSlot>,
    /// Residual separator scope per tree edge, sorted.
    sep_scopes: Vec<Vec<usize>>,
    /// For each variable, the clusters whose attached tables mention it
    /// (only populated for conditioned variables), ascending.
    dependents: Vec<Vec<usize>>,
    messages_computed: u64,
}

impl<'a> ConditionedEngine<'a> {
    pub fn new(net: &'a Network, tree: &'a JoinTree) -> Result<Self, InferenceError> {
        for part in &tree.residual_parts {
            let needed: u128 = part.iter().map(|&v| net.cardinality(v) as u128).product();
            if needed > ENGINE_TABLE_CAP as u128 {
                return Err(InferenceError::CapExceeded {
                    what: "residual cluster table",
                    needed,
                    cap: ENGINE_TABLE_CAP,
                });
            }
        }
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); net.num_variables()];
        for (c, attached) in tree.attached.iter().enumerate() {
            for &j in attached {
                let cpt = &net.cpts[j];
                for &v in std::iter::once(&cpt.child).chain(cpt.parents.iter()) {
                    if tree.conditioned.contains(&v) && dependents[v].last() != Some(&c) {
                        dependents[v].push(c);
                    }
                }
            }
        }
        let sep_scopes = tree
            .separators
            .iter()
            .map(|s| s.iter().copied().filter(|v| !tree.conditioned.contains(v)).collect())
            .collect();
        Ok(ConditionedEngine {
            net,
            tree,
            values: vec![None; net.num_variables()],
            contents: vec![None; tree.num_clusters()],
            messages: vec![
                MessageSlot { valid: false, table: Vec::new(), log_norm: 0.0, zero: false };
                tree.edges.len() * 2
            ],
            sep_scopes,
            dependents,
            messages_computed: 0,
        })
    }

    /// Total directed messages computed so far (cache misses only).
    pub fn messages_computed(&self) -> u64 {
        self.messages_computed
    }

    pub fn tree(&self) -> &JoinTree {
        self.tree
    }

    pub fn value_of(&self, var: usize) -> Option<usize> {
        self.values[var]
    }

    /// Assigns a conditioned variable, invalidating exactly the cluster
    /// contents that mention it and every cached message flowing away from
    /// them. Setting the current value again is a no-op.
    pub fn set_value(&mut self, var: usize, value: usize) {
        debug_assert!(self.tree.conditioned.contains(&var), "variable {var} is not conditioned");
        debug_assert!(value < self.net.cardinality(var));
        if self.values[var] == Some(value) {
            return;
        }
        self.values[var] = Some(value);
        for i in 0..self.dependents[var].len() {
            let c = self.dependents[var][i];
            self.contents[c] = None;
            self.invalidate_from(c);
        }
    }

    fn dir_index(&self, from: usize, edge: usize) -> usize {
        2 * edge + usize::from(self.tree.edges[edge].0 != from)
    }

    /// Invalidates every directed message whose source side contains
    /// cluster `c`. Stops descending at already-invalid edges: a message can
    /// only have been validated after everything it depends on, so whatever
    /// lies beyond an invalid edge is invalid too.
    fn invalidate_from(&mut self, c: usize) {
        let mut stack: Vec<(usize, usize, usize)> =
            self.tree.neighbors(c).iter().map(|&(nb, e)| (c, nb, e)).collect();
        while let Some((from, to, e)) = stack.pop() {
            let d = self.dir_index(from, e);
            if !self.messages[d].valid {
                continue;
            }
            self.messages[d].valid = false;
            for &(nb, e2) in self.tree.neighbors(to) {
                if nb != from {
                    stack.push((to, nb, e2));
                }
            }
        }
    }

    /// Builds the cluster potential: the product of the attached CPT rows
    /// at the current conditioned assignment, tabulated over the residual
    /// part.
    fn ensure_content(&mut self, c: usize) {
        if self.contents[c].is_some() {
            return;
        }
        let scope = self.tree.residual_parts[c].clone();
        let cards: Vec<usize> = scope.iter().map(|&v| self.net.cardinality(v)).collect();
        let len: usize = cards.iter().product();
        let mut values = vec![0.0; len];
        let mut assign = vec![0usize; scope.len()];
        for slot in values.iter_mut() {
            let value_of = |v: usize| -> usize {
                match scope.binary_search(&v) {
                    Ok(pos) => assign[pos],
                    Err(_) => self.values[v].expect("conditioned variable left unassigned"),
                }
            };
            let mut p = 1.0;
            for &j in &self.tree.attached[c] {
                let cpt = &self.net.cpts[j];
                p *= cpt.prob(self.net, value_of(cpt.child), value_of);
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
            increment(&mut assign, &cards);
        }
        self.contents[c] = Some(ClusterFunction { scope, values });
    }

    /// Ensures the message `from → to` over tree edge `edge` is valid,
    /// recursively validating the messages it consumes first.
    fn pull(&mut self, from: usize, to: usize, edge: usize) {
        let d = self.dir_index(from, edge);
        if self.messages[d].valid {
            return;
        }
        let incoming: Vec<(usize, usize)> = self
            .tree
            .neighbors(from)
            .iter()
            .copied()
            .filter(|&(nb, _)| nb != to)
            .collect();
        for &(nb, e2) in &incoming {
            self.pull(nb, from, e2);
        }
        self.ensure_content(from);

        let (raw, log_in, any_zero) = {
            let content = self.contents[from].as_ref().unwrap();
            let cards: Vec<usize> =
                content.scope.iter().map(|&v| self.net.cardinality(v)).collect();
            let out_pos: Vec<usize> = self.sep_scopes[edge]
                .iter()
                .map(|v| content.scope.binary_search(v).unwrap())
                .collect();
            let mut log_in = 0.0;
            let mut any_zero = false;
            let mut inc: Vec<(&[f64], Vec<usize>)> = Vec::with_capacity(incoming.len());
            for &(nb, e2) in &incoming {
                let slot = &self.messages[self.dir_index(nb, e2)];
                if slot.zero {
                    any_zero = true;
                    break;
                }
                log_in += slot.log_norm;
                let pos = self.sep_scopes[e2]
                    .iter()
                    .map(|v| content.scope.binary_search(v).unwrap())
                    .collect();
                inc.push((&slot.table, pos));
            }
            let sep_len: usize =
                self.sep_scopes[edge].iter().map(|&v| self.net.cardinality(v)).product();
            let mut raw = vec![0.0; sep_len];
            if !any_zero {
                let mut assign = vec![0usize; content.scope.len()];
                for &p0 in &content.values {
                    let mut p = p0;
                    if p != 0.0 {
                        for (table, pos) in &inc {
                            p *= table[project(&assign, &cards, pos)];
                            if p == 0.0 {
                                break;
                            }
                        }
                        raw[project(&assign, &cards, &out_pos)] += p;
                    }
                    increment(&mut assign, &cards);
                }
            }
            (raw, log_in, any_zero)
        };

        let norm: f64 = raw.iter().sum();
        let slot = &mut self.messages[d];
        if any_zero || norm <= 0.0 {
            slot.table = vec![0.0; raw.len()];
            slot.log_norm = 0.0;
            slot.zero = true;
        } else {
            slot.table = raw.iter().map(|p| p / norm).collect();
            slot.log_norm = norm.ln() + log_in;
            slot.zero = false;
        }
        slot.valid = true;
        self.messages_computed += 1;
    }

    /// Validates every directed message in a fixed order.
    pub fn propagate_all(&mut self) {
        for e in 0..self.tree.edges.len() {
            let (u, v) = self.tree.edges[e];
            self.pull(u, v, e);
            self.pull(v, u, e);
        }
    }

    /// ln P(current conditioned assignment), evaluated by summing cluster
    /// `site` against its incoming messages. Any site gives the same value;
    /// they differ only in which cached messages they need. Returns
    /// `NEG_INFINITY` for probability zero.
    pub fn ln_joint_at(&mut self, site: usize) -> f64 {
        let neighbors: Vec<(usize, usize)> = self.tree.neighbors(site).to_vec();
        for &(nb, e) in &neighbors {
            self.pull(nb, site, e);
        }
        self.ensure_content(site);
        let content = self.contents[site].as_ref().unwrap();
        let cards: Vec<usize> = content.scope.iter().map(|&v| self.net.cardinality(v)).collect();
        let mut log_in = 0.0;
        let mut inc: Vec<(&[f64], Vec<usize>)> = Vec::with_capacity(neighbors.len());
        for &(nb, e) in &neighbors {
            let slot = &self.messages[self.dir_index(nb, e)];
            if slot.zero {
                return f64::NEG_INFINITY;
            }
            log_in += slot.log_norm;
            let pos = self.sep_scopes[e]
                .iter()
                .map(|v| content.scope.binary_search(v).unwrap())
                .collect();
            inc.push((&slot.table, pos));
        }
        let mut total = 0.0;
        let mut assign = vec![0usize; content.scope.len()];
        for &p0 in &content.values {
            let mut p = p0;
            if p != 0.0 {
                for (table, pos) in &inc {
                    p *= table[project(&assign, &cards, pos)];
                    if p == 0.0 {
                        break;
                    }
                }
                total += p;
            }
            increment(&mut assign, &cards);
        }
        if total <= 0.0 {
            f64::NEG_INFINITY
        } else {
            total.ln() + log_in
        }
    }

    /// The normalized belief over cluster `site`'s residual part:
    /// P(residual part | conditioned assignment).
    pub fn belief(&mut self, site: usize) -> Result<ClusterFunction, InferenceError> {
        let neighbors: Vec<(usize, usize)> = self.tree.neighbors(site).to_vec();
        for &(nb, e) in &neighbors {
            self.pull(nb, site, e);
        }
        self.ensure_content(site);
        let content = self.contents[site].as_ref().unwrap();
        let cards: Vec<usize> = content.scope.iter().map(|&v| self.net.cardinality(v)).collect();
        let mut inc: Vec<(&[f64], Vec<usize>)> = Vec::with_capacity(neighbors.len());
        let mut any_zero = false;
        for &(nb, e) in &neighbors {
            let slot = &self.messages[self.dir_index(nb, e)];
            if slot.zero {
                any_zero = true;
                break;
            }
            let pos = self.sep_scopes[e]
                .iter()
                .map(|v| content.scope.binary_search(v).unwrap())
                .collect();
            inc.push((&slot.table, pos));
        }
        let mut values = vec![0.0; content.values.len()];
        if !any_zero {
            let mut assign = vec![0usize; content.scope.len()];
            for (k, &p0) in content.values.iter().enumerate() {
                let mut p = p0;
                if p != 0.0 {
                    for (table, pos) in &inc {
                        p *= table[project(&assign, &cards, pos)];
                        if p == 0.0 {
                            break;
                        }
                    }
                    values[k] = p;
                }
                increment(&mut assign, &cards);
            }
        }
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(InferenceError::ZeroEvidence);
        }
        for v in values.iter_mut() {
            *v /= total;
        }
        Ok(ClusterFunction { scope: content.scope.clone(), values })
    }

    /// P(var | conditioned assignment) for a residual variable, read from
    /// the lowest-indexed cluster containing it.
    pub fn marginal_of(&mut self, var: usize) -> Result<Vec<f64>, InferenceError> {
        debug_assert!(!self.tree.conditioned.contains(&var), "variable {var} is conditioned");
        let site = self.tree.clusters_containing(var)[0];
        Ok(self.belief(site)?.marginal_onto(self.net, var))
    }

    /// Marginals of every residual variable from one propagation: each
    /// cluster's belief is computed once and every residual variable is
    /// read from its lowest-indexed cluster. Non-residual slots are `None`.
    pub fn residual_marginals(&mut self) -> Result<Vec<Option<Vec<f64>>>, InferenceError> {
        self.propagate_all();
        let mut out: Vec<Option<Vec<f64>>> = vec![None; self.net.num_variables()];
        for c in 0..self.tree.num_clusters() {
            let needed: Vec<usize> = self.tree.residual_parts[c]
                .iter()
                .copied()
                .filter(|&v| out[v].is_none())
                .collect();
            if needed.is_empty() {
                continue;
            }
            let b = self.belief(c)?;
            for v in needed {
                out[v] = Some(b.marginal_onto(self.net, v));
            }
        }
        Ok(out)
    }
}

/// Exact posterior marginals and evidence probability by join-tree
/// propagation, conditioning on the evidence variables.
pub fn jtc_posteriors(net: &Network, e: &Evidence) -> Result<Marginals, InferenceError> {
    let conditioned: BTreeSet<usize> = e.variables().into_iter().collect();
    let tree = build_join_tree(net, &conditioned);
    let mut engine = ConditionedEngine::new(net, &tree)?;
    for (&v, &s) in e.iter() {
        engine.set_value(v, s);
    }
    let ln_pe = engine.ln_joint_at(0);
    if ln_pe == f64::NEG_INFINITY {
        return Err(InferenceError::ZeroEvidence);
    }
    let marginals = engine.residual_marginals()?;
    let mut tables = Vec::with_capacity(net.num_variables());
    for v in 0..net.num_variables() {
        if let Some(s) = e.get(v) {
            let mut t = vec![0.0; net.cardinality(v)];
            t[s] = 1.0;
            tables.push(t);
        } else {
            tables.push(marginals[v].clone().expect("unobserved variable is residual"));
        }
    }
    Ok(Marginals { tables, evidence_probability: Some(ln_pe.exp()) })
}

/// P(e) by join-tree propagation. Unlike [`jtc_posteriors`], impossible
/// evidence is an answer (0.0), not an error.
pub fn evidence_probability(net: &Network, e: &Evidence) -> Result<f64, InferenceError> {
    let conditioned: BTreeSet<usize> = e.variables().into_iter().collect();
    let tree = build_join_tree(net, &conditioned);
    let mut engine = ConditionedEngine::new(net, &tree)?;
    for (&v, &s) in e.iter() {
        engine.set_value(v, s);
    }
    let ln_pe = engine.ln_joint_at(0);
    Ok(if ln_pe == f64::NEG_INFINITY { 0.0 } else { ln_pe.exp() })
}

/// Exact posteriors by cutset conditioning: enumerates every assignment of
/// the cutset, weighs each by P(cutset assignment, e) from one shared
/// engine, and mixes the conditioned marginals. The enumeration is capped
/// at [`CUTSET_ENUM_CAP`] assignments.
pub fn cutset_conditioning(
    net: &Network,
    e: &Evidence,
    members: &BTreeSet<usize>,
) -> Result<Marginals, InferenceError> {
    debug_assert!(members.iter().all(|v| !e.contains(*v)), "cutset overlaps evidence");
    let mut conditioned: BTreeSet<usize> = members.clone();
    conditioned.extend(e.variables());
    let tree = build_join_tree(net, &conditioned);
    let mut engine = ConditionedEngine::new(net, &tree)?;
    for (&v, &s) in e.iter() {
        engine.set_value(v, s);
    }
    let mlist: Vec<usize> = members.iter().copied().collect();
    let cards: Vec<usize> = mlist.iter().map(|&v| net.cardinality(v)).collect();
    let total: u128 = cards.iter().map(|&c| c as u128).product();
    if total > CUTSET_ENUM_CAP as u128 {
        return Err(InferenceError::CapExceeded {
            what: "cutset assignment enumeration",
            needed: total,
            cap: CUTSET_ENUM_CAP,
        });
    }
    let mut assign = vec![0usize; mlist.len()];
    for (&v, &s) in mlist.iter().zip(&assign) {
        engine.set_value(v, s);
    }
    let mut z = 0.0;
    let mut acc: Vec<Vec<f64>> =
        (0..net.num_variables()).map(|v| vec![0.0; net.cardinality(v)]).collect();
    for step in 0..total {
        let ln_w = engine.ln_joint_at(0);
        if ln_w > f64::NEG_INFINITY {
            let w = ln_w.exp();
            z += w;
            let marginals = engine.residual_marginals()?;
            for v in 0..net.num_variables() {
                if let Some(m) = &marginals[v] {
                    for (a, p) in acc[v].iter_mut().zip(m) {
                        *a += w * p;
                    }
                }
            }
            for (pos, &v) in mlist.iter().enumerate() {
                acc[v][assign[pos]] += w;
            }
        }
        if step + 1 < total {
            increment(&mut assign, &cards);
            for (pos, &v) in mlist.iter().enumerate() {
                engine.set_value(v, assign[pos]);
            }
        }
    }
    if z <= 0.0 {
        return Err(InferenceError::ZeroEvidence);
    }
    let mut tables = Vec::with_capacity(net.num_variables());
    for (v, mut t) in acc.into_iter().enumerate() {
        if let Some(s) = e.get(v) {
            t = vec![0.0; net.cardinality(v)];
            t[s] = 1.0;
        } else {
            for p in t.iter_mut() {
                *p /= z;
            }
        }
        tables.push(t);
    }
    Ok(Marginals { tables, evidence_probability: Some(z) })
}

/// The unnormalized conditional P(member i = v, other members, e) for every
/// value v, each term computed by an independent from-scratch propagation.
/// This is the reference the cached engine is checked against.
pub fn conditioned_cutset_distribution(
    net: &Network,
    e: &Evidence,
    members: &[usize],
    values: &[usize],
    i: usize,
) -> Result<Vec<f64>, InferenceError> {
    debug_assert_eq!(members.len(), values.len());
    let var = members[i];
    let mut out = Vec::with_capacity(net.cardinality(var));
    for val in 0..net.cardinality(var) {
        let mut ev = e.clone();
        for (j, (&m, &s)) in members.iter().zip(values).enumerate() {
            ev.bind(m, if j == i { val } else { s });
        }
        out.push(evidence_probability(net, &ev)?);
    }
    Ok(out)
}
