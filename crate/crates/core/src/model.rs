//! Network representation: variables, CPTs, evidence, assignments, marginals.
//!
//! Variables are referenced internally by dense integer index; string names
//! exist only at the file boundary. CPT rows are indexed with the *first*
//! listed parent most significant and child states fastest-varying inside a
//! row, a single fixed convention that keeps files and oracles bit-comparable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{InferenceError, ModelError};

/// A discrete variable: a name and an ordered list of state labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    /// Number of states in the variable's domain.
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// Conditional probability table for one variable.
///
/// `table[r][s]` is P(child = s | parent configuration r), where r enumerates
/// parent assignments with the first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: usize,
    pub parents: Vec<usize>,
    pub table: Vec<Vec<f64>>,
}

impl Cpt {
    /// Row index for the parent values returned by `value_of` (state index
    /// per variable index). First listed parent is most significant.
    pub fn row_index(&self, net: &Network, value_of: impl Fn(usize) -> usize) -> usize {
        let mut r = 0;
        for &p in &self.parents {
            r = r * net.variables[p].cardinality() + value_of(p);
        }
        r
    }

    /// Table entry P(child = `child_state` | parent values from `value_of`).
    pub fn prob(&self, net: &Network, child_state: usize, value_of: impl Fn(usize) -> usize) -> f64 {
        self.table[self.row_index(net, &value_of)][child_state]
    }
}

/// A validated discrete Bayesian network.
#[derive(Debug, Clone)]
pub struct Network {
    pub variables: Vec<Variable>,
    /// One CPT per variable, stored at the child's index.
    pub cpts: Vec<Cpt>,
    children: Vec<Vec<usize>>,
    topological: Vec<usize>,
}

impl Network {
    /// Builds and validates a network from variables and CPTs (one per
    /// variable, any order). Checks domains, table shapes, row sums within
    /// 1e-9 (rows are never silently renormalized), and acyclicity.
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self, ModelError> {
        if variables.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        for v in &variables {
            if !seen.insert(v.name.clone()) {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
            if v.states.is_empty() {
                return Err(ModelError::NoStates(v.name.clone()));
            }
            let mut states = std::collections::HashSet::new();
            for s in &v.states {
                if !states.insert(s) {
                    return Err(ModelError::DuplicateState {
                        variable: v.name.clone(),
                        state: s.clone(),
                    });
                }
            }
        }

        let n = variables.len();
        let mut by_child: Vec<Option<Cpt>> = vec![None; n];
        for cpt in cpts {
            if by_child[cpt.child].is_some() {
                return Err(ModelError::CptCount(variables[cpt.child].name.clone(), 2));
            }
            let child = cpt.child;
            by_child[child] = Some(cpt);
        }
        let mut cpts = Vec::with_capacity(n);
        for (i, slot) in by_child.into_iter().enumerate() {
            match slot {
                Some(c) => cpts.push(c),
                None => return Err(ModelError::CptCount(variables[i].name.clone(), 0)),
            }
        }

        for cpt in &cpts {
            let child_name = &variables[cpt.child].name;
            let mut parent_seen = std::collections::HashSet::new();
            for &p in &cpt.parents {
                if p == cpt.child {
                    return Err(ModelError::SelfParent(child_name.clone()));
                }
                if !parent_seen.insert(p) {
                    return Err(ModelError::DuplicateParent(
                        variables[p].name.clone(),
                        child_name.clone(),
                    ));
                }
            }
            let rows: usize = cpt.parents.iter().map(|&p| variables[p].cardinality()).product();
            if cpt.table.len() != rows {
                return Err(ModelError::RowCount {
                    child: child_name.clone(),
                    expected: rows,
                    got: cpt.table.len(),
                });
            }
            let width = variables[cpt.child].cardinality();
            for (r, row) in cpt.table.iter().enumerate() {
                if row.len() != width {
                    return Err(ModelError::RowWidth {
                        child: child_name.clone(),
                        row: r,
                        expected: width,
                        got: row.len(),
                    });
                }
                let mut sum = 0.0;
                for &v in row {
                    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                        return Err(ModelError::BadEntry { child: child_name.clone(), row: r, value: v });
                    }
                    sum += v;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(ModelError::RowSum { child: child_name.clone(), row: r, sum });
                }
            }
        }

        let mut children = vec![Vec::new(); n];
        for cpt in &cpts {
            for &p in &cpt.parents {
                children[p].push(cpt.child);
            }
        }
        for ch in &mut children {
            ch.sort_unstable();
        }

        let topological = topological_order(&variables, &cpts)?;
        Ok(Network { variables, cpts, children, topological })
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.variables[i].cardinality()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.cpts[i].parents
    }

    /// Children of `i`, sorted ascending.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// A topological order of the variables (parents before children).
    pub fn topological_order(&self) -> &[usize] {
        &self.topological
    }

    /// Resolves a variable name to its index.
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// The Markov blanket of `i`: parents, children, and the children's other
    /// parents, excluding `i` itself. Sorted ascending.
    pub fn markov_blanket(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.parents(i).to_vec();
        for &c in self.children(i) {
            out.push(c);
            for &cp in self.parents(c) {
                if cp != i {
                    out.push(cp);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Joint probability of a total assignment, ∏_i P(x_i | x_{pa_i}).
    ///
    /// Computed as a direct product; if the product underflows while every
    /// factor is positive, it is recomputed in log space so that tiny but
    /// representable results survive.
    pub fn joint_probability(&self, x: &Assignment) -> f64 {
        debug_assert!(x.is_total());
        let mut product = 1.0f64;
        let mut any_tiny = false;
        for cpt in &self.cpts {
            let p = cpt.prob(self, x.get(cpt.child).unwrap(), |v| x.get(v).unwrap());
            if p == 0.0 {
                return 0.0;
            }
            if p < 1e-300 {
                any_tiny = true;
            }
            product *= p;
        }
        if product > 0.0 && !any_tiny {
            return product;
        }
        let mut log_sum = 0.0f64;
        for cpt in &self.cpts {
            log_sum += cpt.prob(self, x.get(cpt.child).unwrap(), |v| x.get(v).unwrap()).ln();
        }
        log_sum.exp()
    }
}

fn topological_order(variables: &[Variable], cpts: &[Cpt]) -> Result<Vec<usize>, ModelError> {
    let n = variables.len();
    let mut indegree: Vec<usize> = cpts.iter().map(|c| c.parents.len()).collect();
    let mut queue: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = indegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| std::cmp::Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(n);
    let mut children = vec![Vec::new(); n];
    for c in cpts {
        for &p in &c.parents {
            children[p].push(c.child);
        }
    }
    while let Some(std::cmp::Reverse(i)) = queue.pop() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push(std::cmp::Reverse(c));
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
        return Err(ModelError::Cycle(variables[stuck].name.clone()));
    }
    Ok(order)
}

/// A (possibly partial) assignment of state indices to variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment { values: vec![None; n] }
    }

    /// Total assignment from one state index per variable.
    pub fn total(values: Vec<usize>) -> Self {
        Assignment { values: values.into_iter().map(Some).collect() }
    }

    pub fn from_evidence(n: usize, e: &Evidence) -> Self {
        let mut a = Assignment::empty(n);
        for (&v, &s) in e.iter() {
            a.set(v, s);
        }
        a
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, state: usize) {
        self.values[i] = Some(state);
    }

    pub fn clear(&mut self, i: usize) {
        self.values[i] = None;
    }

    pub fn is_total(&self) -> bool {
        self.values.iter().all(|v| v.is_some())
    }

    /// Indices without a value, ascending.
    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i].is_none()).collect()
    }
}

/// Observed evidence: a map from variable index to observed state index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    bindings: BTreeMap<usize, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Evidence::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Evidence { bindings: pairs.into_iter().collect() }
    }

    pub fn bind(&mut self, var: usize, state: usize) {
        self.bindings.insert(var, state);
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.bindings.get(&var).copied()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.bindings.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Iterates bindings in ascending variable order.
    pub fn iter(&self) -> impl Iterator<Item = (&usize, &usize)> {
        self.bindings.iter()
    }

    pub fn variables(&self) -> Vec<usize> {
        self.bindings.keys().copied().collect()
    }

    /// Parses `{"evidence": {name: state-label, ...}}`, resolving names
    /// against `net`.
    pub fn parse(net: &Network, text: &str) -> Result<Self, ModelError> {
        #[derive(Deserialize)]
        struct RawEvidence {
            evidence: BTreeMap<String, String>,
        }
        let raw: RawEvidence = serde_json::from_str(text)?;
        let mut out = Evidence::new();
        for (name, state) in raw.evidence {
            let var = net
                .variable_index(&name)
                .ok_or_else(|| ModelError::UnknownVariable(name.clone()))?;
            let s = net.variables[var]
                .states
                .iter()
                .position(|st| *st == state)
                .ok_or_else(|| ModelError::UnknownState { variable: name, state })?;
            out.bind(var, s);
        }
        Ok(out)
    }

    /// Serializes to the evidence file format with names resolved from `net`.
    pub fn serialize(&self, net: &Network) -> String {
        let map: BTreeMap<&str, &str> = self
            .bindings
            .iter()
            .map(|(&v, &s)| (net.variables[v].name.as_str(), net.variables[v].states[s].as_str()))
            .collect();
        let mut root = serde_json::Map::new();
        root.insert("evidence".into(), serde_json::to_value(map).unwrap());
        serde_json::to_string_pretty(&serde_json::Value::Object(root)).unwrap()
    }
}

/// Posterior (or estimated) marginal tables, one probability vector per
/// variable, plus optionally the evidence probability P(e).
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub tables: Vec<Vec<f64>>,
    pub evidence_probability: Option<f64>,
}

impl Marginals {
    pub fn get(&self, var: usize) -> &[f64] {
        &self.tables[var]
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct VariableJson {
    name: String,
    states: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CptJson {
    child: String,
    parents: Vec<String>,
    table: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    variables: Vec<VariableJson>,
    cpts: Vec<CptJson>,
}

/// Parses the JSON network format (see the crate docs for the layout) and
/// validates the result.
pub fn parse_network(text: &str) -> Result<Network, ModelError> {
    let raw: NetworkJson = serde_json::from_str(text)?;
    let variables: Vec<Variable> = raw
        .variables
        .into_iter()
        .map(|v| Variable { name: v.name, states: v.states })
        .collect();
    let index_of = |name: &str| -> Result<usize, ModelError> {
        variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    };
    let mut cpts = Vec::with_capacity(raw.cpts.len());
    for c in raw.cpts {
        let child = index_of(&c.child)?;
        let parents = c.parents.iter().map(|p| index_of(p)).collect::<Result<Vec<_>, _>>()?;
        cpts.push(Cpt { child, parents, table: c.table });
    }
    if cpts.len() != variables.len() {
        // Pinpoint a variable with the wrong CPT count for the error message.
        for (i, v) in variables.iter().enumerate() {
            let count = cpts.iter().filter(|c| c.child == i).count();
            if count != 1 {
                return Err(ModelError::CptCount(v.name.clone(), count));
            }
        }
    }
    Network::new(variables, cpts)
}

/// Serializes a network to the JSON file format. Output is deterministic and
/// round-trips through [`parse_network`] byte-identically.
pub fn serialize_network(net: &Network) -> String {
    let raw = NetworkJson {
        variables: net
            .variables
            .iter()
            .map(|v| VariableJson { name: v.name.clone(), states: v.states.clone() })
            .collect(),
        cpts: net
            .cpts
            .iter()
            .map(|c| CptJson {
                child: net.variables[c.child].name.clone(),
                parents: c.parents.iter().map(|&p| net.variables[p].name.clone()).collect(),
                table: c.table.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).unwrap()
}

// ---------------------------------------------------------------------------
// Enumeration oracle
// ---------------------------------------------------------------------------

/// Default cap on the enumerated state space of [`brute_force_posteriors`].
pub const BRUTE_FORCE_CAP: u64 = 1 << 24;

/// Exact posteriors by exhaustive enumeration of all completions of `e`.
///
/// A test oracle: simple, slow, and independent of the clustering engine.
/// Rejects inputs whose enumerated (unobserved) state space exceeds `cap`
/// (default [`BRUTE_FORCE_CAP`]); reports P(e) = 0 distinctly.
pub fn brute_force_posteriors(
    net: &Network,
    e: &Evidence,
    cap: Option<u64>,
) -> Result<Marginals, InferenceError> {
    let cap = cap.unwrap_or(BRUTE_FORCE_CAP);
    let free: Vec<usize> = (0..net.num_variables()).filter(|i| !e.contains(*i)).collect();
    let mut space: u128 = 1;
    for &i in &free {
        space = space.saturating_mul(net.cardinality(i) as u128);
    }
    if space > cap as u128 {
        return Err(InferenceError::CapExceeded { what: "brute-force enumeration", needed: space, cap });
    }

    let mut x = Assignment::from_evidence(net.num_variables(), e);
    for &i in &free {
        x.set(i, 0);
    }
    let mut sums: Vec<Vec<f64>> =
        (0..net.num_variables()).map(|i| vec![0.0; net.cardinality(i)]).collect();
    let mut total = 0.0f64;
    loop {
        let p = net.joint_probability(&x);
        if p > 0.0 {
            total += p;
            for i in 0..net.num_variables() {
                sums[i][x.get(i).unwrap()] += p;
            }
        }
        // Odometer over the free variables, last free variable fastest.
        let mut pos = free.len();
        loop {
            if pos == 0 {
                break;
            }
            let v = free[pos - 1];
            let next = x.get(v).unwrap() + 1;
            if next < net.cardinality(v) {
                x.set(v, next);
                break;
            }
            x.set(v, 0);
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
    }

    if total <= 0.0 {
        return Err(InferenceError::ZeroEvidence);
    }
    for t in &mut sums {
        for v in t.iter_mut() {
            *v /= total;
        }
    }
    Ok(Marginals { tables: sums, evidence_probability: Some(total) })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain_ab() -> Network {
        // A→B with P(A=1)=0.6, P(B=1|A=0)=0.2, P(B=1|A=1)=0.7.
        Network::new(
            vec![
                Variable { name: "A".into(), states: vec!["0".into(), "1".into()] },
                Variable { name: "B".into(), states: vec!["0".into(), "1".into()] },
            ],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.4, 0.6]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![0.8, 0.2], vec![0.3, 0.7]] },
            ],
        )
        .unwrap()
    }

    fn collider() -> Network {
        // A→C←B with P(A=1)=0.5, P(B=1)=0.5, P(C=1|A,B) as in the table.
        Network::new(
            vec![
                Variable { name: "A".into(), states: vec!["0".into(), "1".into()] },
                Variable { name: "B".into(), states: vec!["0".into(), "1".into()] },
                Variable { name: "C".into(), states: vec!["0".into(), "1".into()] },
            ],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt {
                    child: 2,
                    parents: vec![0, 1],
                    // rows: (A=0,B=0), (A=0,B=1), (A=1,B=0), (A=1,B=1)
                    table: vec![
                        vec![0.9, 0.1],
                        vec![0.8, 0.2],
                        vec![0.6, 0.4],
                        vec![0.1, 0.9],
                    ],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn smallest_legal_network_parses() {
        let text = r#"{
            "variables": [{"name": "X", "states": ["0", "1"]}],
            "cpts": [{"child": "X", "parents": [], "table": [[0.3, 0.7]]}]
        }"#;
        let net = parse_network(text).unwrap();
        assert_eq!(net.num_variables(), 1);
        assert_eq!(net.cpts[0].table, vec![vec![0.3, 0.7]]);
    }

    #[test]
    fn bad_row_sum_names_the_row() {
        let text = r#"{
            "variables": [{"name": "X", "states": ["0", "1"]}],
            "cpts": [{"child": "X", "parents": [], "table": [[0.5, 0.6]]}]
        }"#;
        match parse_network(text) {
            Err(ModelError::RowSum { child, row, .. }) => {
                assert_eq!(child, "X");
                assert_eq!(row, 0);
            }
            other => panic!("expected RowSum error, got {other:?}"),
        }
    }

    #[test]
    fn cycle_detected() {
        let text = r#"{
            "variables": [{"name": "A", "states": ["0","1"]}, {"name": "B", "states": ["0","1"]}],
            "cpts": [
                {"child": "A", "parents": ["B"], "table": [[0.5,0.5],[0.5,0.5]]},
                {"child": "B", "parents": ["A"], "table": [[0.5,0.5],[0.5,0.5]]}
            ]
        }"#;
        assert!(matches!(parse_network(text), Err(ModelError::Cycle(_))));
    }

    #[test]
    fn serializer_round_trips_byte_identically() {
        let net = collider();
        let text = serialize_network(&net);
        let reparsed = parse_network(&text).unwrap();
        assert_eq!(serialize_network(&reparsed), text);
    }

    #[test]
    fn joint_probability_chain() {
        let net = chain_ab();
        let x = Assignment::total(vec![1, 1]);
        assert!((net.joint_probability(&x) - 0.42).abs() < 1e-15);
    }

    #[test]
    fn joint_probability_uniform_independents() {
        let n = 7;
        let vars: Vec<Variable> = (0..n)
            .map(|i| Variable { name: format!("X{i}"), states: vec!["0".into(), "1".into()] })
            .collect();
        let cpts: Vec<Cpt> = (0..n)
            .map(|i| Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] })
            .collect();
        let net = Network::new(vars, cpts).unwrap();
        let x = Assignment::total(vec![1, 0, 1, 1, 0, 0, 1]);
        assert!((net.joint_probability(&x) - 0.5f64.powi(n as i32)).abs() < 1e-15);
    }

    #[test]
    fn joint_probability_matches_reverse_order_product() {
        let net = collider();
        for bits in 0..8usize {
            let x = Assignment::total(vec![bits & 1, (bits >> 1) & 1, (bits >> 2) & 1]);
            let mut rev = 1.0;
            for cpt in net.cpts.iter().rev() {
                rev *= cpt.prob(&net, x.get(cpt.child).unwrap(), |v| x.get(v).unwrap());
            }
            assert!((net.joint_probability(&x) - rev).abs() < 1e-15);
        }
    }

    #[test]
    fn markov_blanket_chain_and_collider() {
        let chain = Network::new(
            vec![
                Variable { name: "A".into(), states: vec!["0".into(), "1".into()] },
                Variable { name: "B".into(), states: vec!["0".into(), "1".into()] },
                Variable { name: "C".into(), states: vec!["0".into(), "1".into()] },
            ],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![0.5, 0.5], vec![0.5, 0.5]] },
                Cpt { child: 2, parents: vec![1], table: vec![vec![0.5, 0.5], vec![0.5, 0.5]] },
            ],
        )
        .unwrap();
        assert_eq!(chain.markov_blanket(0), vec![1]);
        assert_eq!(chain.markov_blanket(1), vec![0, 2]);

        let net = collider();
        assert_eq!(net.markov_blanket(0), vec![1, 2]);
        assert_eq!(net.markov_blanket(2), vec![0, 1]);
    }

    #[test]
    fn brute_force_empty_evidence_uniform() {
        let vars: Vec<Variable> = (0..3)
            .map(|i| Variable { name: format!("X{i}"), states: vec!["0".into(), "1".into()] })
            .collect();
        let cpts: Vec<Cpt> = (0..3)
            .map(|i| Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] })
            .collect();
        let net = Network::new(vars, cpts).unwrap();
        let m = brute_force_posteriors(&net, &Evidence::new(), None).unwrap();
        assert!((m.evidence_probability.unwrap() - 1.0).abs() < 1e-12);
        for t in &m.tables {
            assert!((t[0] - 0.5).abs() < 1e-12 && (t[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_force_collider_posterior_is_nine_elevenths() {
        let net = collider();
        let e = Evidence::from_pairs([(1, 1), (2, 1)]);
        let m = brute_force_posteriors(&net, &e, None).unwrap();
        assert!((m.get(0)[1] - 9.0 / 11.0).abs() < 1e-12);
        // Evidence-bound variables carry a degenerate vector.
        assert_eq!(m.get(1), &[0.0, 1.0]);
    }

    #[test]
    fn brute_force_single_variable_prior_exact() {
        let net = parse_network(
            r#"{
                "variables": [{"name": "X", "states": ["a", "b", "c"]}],
                "cpts": [{"child": "X", "parents": [], "table": [[0.2, 0.5, 0.3]]}]
            }"#,
        )
        .unwrap();
        let m = brute_force_posteriors(&net, &Evidence::new(), None).unwrap();
        assert_eq!(m.get(0), &[0.2, 0.5, 0.3]);
    }

    #[test]
    fn brute_force_zero_evidence_signaled() {
        // Deterministic CPT: C = A AND B; evidence contradicts it.
        let net = Network::new(
            vec![
                Variable { name: "A".into(), states: vec!["0".into(), "1".into()] },
                Variable { name: "C".into(), states: vec!["0".into(), "1".into()] },
            ],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.0, 1.0]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![1.0, 0.0], vec![1.0, 0.0]] },
            ],
        )
        .unwrap();
        let e = Evidence::from_pairs([(1, 1)]);
        assert!(matches!(
            brute_force_posteriors(&net, &e, None),
            Err(InferenceError::ZeroEvidence)
        ));
    }

    #[test]
    fn brute_force_cap_enforced() {
        let vars: Vec<Variable> = (0..5)
            .map(|i| Variable { name: format!("X{i}"), states: vec!["0".into(), "1".into()] })
            .collect();
        let cpts: Vec<Cpt> = (0..5)
            .map(|i| Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] })
            .collect();
        let net = Network::new(vars, cpts).unwrap();
        assert!(matches!(
            brute_force_posteriors(&net, &Evidence::new(), Some(16)),
            Err(InferenceError::CapExceeded { .. })
        ));
    }

    #[test]
    fn joint_sums_to_one_over_all_assignments() {
        let net = collider();
        let mut total = 0.0;
        for bits in 0..8usize {
            let x = Assignment::total(vec![bits & 1, (bits >> 1) & 1, (bits >> 2) & 1]);
            total += net.joint_probability(&x);
        }
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn evidence_parse_and_serialize() {
        let net = collider();
        let e = Evidence::parse(&net, r#"{"evidence": {"B": "1", "C": "0"}}"#).unwrap();
        assert_eq!(e.get(1), Some(1));
        assert_eq!(e.get(2), Some(0));
        let text = e.serialize(&net);
        let back = Evidence::parse(&net, &text).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn evidence_unknown_state_rejected() {
        let net = collider();
        assert!(matches!(
            Evidence::parse(&net, r#"{"evidence": {"B": "5"}}"#),
            Err(ModelError::UnknownState { .. })
        ));
    }

    #[test]
    fn row_indexing_first_parent_most_significant() {
        let net = collider();
        let cpt = &net.cpts[2];
        // (A=1, B=0) must select row 2 = 1*2 + 0.
        let x = Assignment::total(vec![1, 0, 0]);
        assert_eq!(cpt.row_index(&net, |v| x.get(v).unwrap()), 2);
        assert!((cpt.prob(&net, 1, |v| x.get(v).unwrap()) - 0.4).abs() < 1e-15);
    }
}
