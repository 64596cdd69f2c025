//! Iterative belief propagation (loopy π/λ message passing).
//!
//! Messages live on the arcs of the DAG itself: each arc p → c carries a π
//! message (parent to child, over p's states) and a λ message (child to
//! parent, also over p's states). All messages start uniform and are
//! updated synchronously — every new message is computed from the previous
//! iteration's messages — until the largest componentwise change drops
//! below tolerance or the iteration cap is hit. On singly connected
//! networks the fixpoint is exact and is reached in at most diameter + 1
//! sweeps; on loopy networks the result is the usual IBP approximation.

use crate::model::{Evidence, Marginals, Network};

#[derive(Debug, Clone, Copy)]
pub struct IbpConfig {
    pub max_iters: usize,
    /// Convergence threshold on the max componentwise message change.
    pub tol: f64,
}

impl Default for IbpConfig {
    fn default() -> Self {
        IbpConfig { max_iters: 25, tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct IbpResult {
    pub marginals: Marginals,
    pub converged: bool,
    /// Synchronous sweeps performed, including the one that detected
    /// convergence.
    pub iterations: usize,
    /// Variables whose belief had zero mass (contradictory messages, as
    /// happens under impossible evidence); their marginals fall back to
    /// uniform.
    pub zero_beliefs: Vec<usize>,
}

struct Arcs {
    /// (parent, child, parent's position in the child's parent list).
    arcs: Vec<(usize, usize, usize)>,
    /// Arc ids entering each variable from its parents, in parent order.
    incoming: Vec<Vec<usize>>,
    /// Arc ids leaving each variable toward its children, ascending child.
    outgoing: Vec<Vec<usize>>,
}

fn build_arcs(net: &Network) -> Arcs {
    let n = net.num_variables();
    let mut arcs = Vec::new();
    let mut incoming = vec![Vec::new(); n];
    let mut outgoing = vec![Vec::new(); n];
    for c in 0..n {
        for (j, &p) in net.parents(c).iter().enumerate() {
            let id = arcs.len();
            arcs.push((p, c, j));
            incoming[c].push(id);
            outgoing[p].push(id);
        }
    }
    Arcs { arcs, incoming, outgoing }
}

/// Normalizes `v` in place; returns false (leaving it uniform) if the mass
/// is zero.
fn normalize(v: &mut [f64]) -> bool {
    let s: f64 = v.iter().sum();
    if s <= 0.0 {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
        return false;
    }
    v.iter_mut().for_each(|x| *x /= s);
    true
}

/// Posterior marginals by iterative belief propagation.
pub fn ibp_posteriors(net: &Network, e: &Evidence, config: IbpConfig) -> IbpResult {
    let n = net.num_variables();
    let arcs = build_arcs(net);
    let m = arcs.arcs.len();
    let uniform_over = |v: usize| -> Vec<f64> {
        vec![1.0 / net.cardinality(v) as f64; net.cardinality(v)]
    };
    // Both message kinds on arc (p, c) range over p's states.
    let mut pi: Vec<Vec<f64>> = arcs.arcs.iter().map(|&(p, _, _)| uniform_over(p)).collect();
    let mut lambda = pi.clone();

    let indicator = |v: usize| -> Vec<f64> {
        match e.get(v) {
            Some(s) => {
                let mut t = vec![0.0; net.cardinality(v)];
                t[s] = 1.0;
                t
            }
            None => vec![1.0; net.cardinality(v)],
        }
    };
    let ev: Vec<Vec<f64>> = (0..n).map(indicator).collect();

    // π value of a variable: its CPT averaged over the parent π messages.
    let pi_value = |pi: &[Vec<f64>], x: usize| -> Vec<f64> {
        let cpt = &net.cpts[x];
        let cards: Vec<usize> = cpt.parents.iter().map(|&p| net.cardinality(p)).collect();
        let mut out = vec![0.0; net.cardinality(x)];
        let mut u = vec![0usize; cpt.parents.len()];
        for row in &cpt.table {
            let mut q = 1.0;
            for (j, &id) in arcs.incoming[x].iter().enumerate() {
                q *= pi[id][u[j]];
            }
            if q != 0.0 {
                for (o, t) in out.iter_mut().zip(row) {
                    *o += q * t;
                }
            }
            // Rows are ordered with the first parent most significant, so
            // the odometer below tracks the row index exactly.
            for j in (0..u.len()).rev() {
                u[j] += 1;
                if u[j] < cards[j] {
                    break;
                }
                u[j] = 0;
            }
        }
        out
    };
    // λ value of a variable: evidence indicator times the product of the
    // children's λ messages.
    let lambda_value = |lambda: &[Vec<f64>], x: usize| -> Vec<f64> {
        let mut out = ev[x].clone();
        for &id in &arcs.outgoing[x] {
            for (o, l) in out.iter_mut().zip(&lambda[id]) {
                *o *= l;
            }
        }
        out
    };

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        iterations += 1;
        let pis: Vec<Vec<f64>> = (0..n).map(|x| pi_value(&pi, x)).collect();
        let lambdas: Vec<Vec<f64>> = (0..n).map(|x| lambda_value(&lambda, x)).collect();

        let mut new_pi = pi.clone();
        let mut new_lambda = lambda.clone();
        for (id, &(p, c, j)) in arcs.arcs.iter().enumerate() {
            // π message p → c: p's belief with c's own λ divided back out
            // (computed as a product excluding arc id).
            let mut msg: Vec<f64> = pis[p].iter().zip(&ev[p]).map(|(a, b)| a * b).collect();
            for &other in &arcs.outgoing[p] {
                if other != id {
                    for (o, l) in msg.iter_mut().zip(&lambda[other]) {
                        *o *= l;
                    }
                }
            }
            normalize(&mut msg);
            new_pi[id] = msg;

            // λ message c → p: sum the child's λ value against the CPT,
            // weighting the other parents by their π messages.
            let cpt = &net.cpts[c];
            let cards: Vec<usize> = cpt.parents.iter().map(|&q| net.cardinality(q)).collect();
            let mut msg = vec![0.0; net.cardinality(p)];
            let mut u = vec![0usize; cpt.parents.len()];
            for row in &cpt.table {
                let mut q = 1.0;
                for (j2, &id2) in arcs.incoming[c].iter().enumerate() {
                    if j2 != j {
                        q *= pi[id2][u[j2]];
                    }
                }
                if q != 0.0 {
                    let s: f64 = lambdas[c].iter().zip(row).map(|(l, t)| l * t).sum();
                    msg[u[j]] += q * s;
                }
                for j2 in (0..u.len()).rev() {
                    u[j2] += 1;
                    if u[j2] < cards[j2] {
                        break;
                    }
                    u[j2] = 0;
                }
            }
            normalize(&mut msg);
            new_lambda[id] = msg;
        }

        let mut delta = 0.0f64;
        for id in 0..m {
            for (a, b) in new_pi[id].iter().zip(&pi[id]) {
                delta = delta.max((a - b).abs());
            }
            for (a, b) in new_lambda[id].iter().zip(&lambda[id]) {
                delta = delta.max((a - b).abs());
            }
        }
        pi = new_pi;
        lambda = new_lambda;
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    let mut tables = Vec::with_capacity(n);
    let mut zero_beliefs = Vec::new();
    for x in 0..n {
        let mut b: Vec<f64> =
            pi_value(&pi, x).iter().zip(lambda_value(&lambda, x)).map(|(a, b)| a * b).collect();
        if !normalize(&mut b) {
            zero_beliefs.push(x);
        }
        tables.push(b);
    }
    IbpResult {
        marginals: Marginals { tables, evidence_probability: None },
        converged,
        iterations,
        zero_beliefs,
    }
}

/// Longest shortest path (in edges) of the network's undirected skeleton;
/// disconnected pairs are ignored.
pub fn skeleton_diameter(net: &Network) -> usize {
    let n = net.num_variables();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..n {
        for &p in net.parents(c) {
            adj[p].push(c);
            adj[c].push(p);
        }
    }
    let mut best = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        best = best.max(dist.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::demo_network;
    use crate::generators::{pick_evidence, random_polytree, EvidencePolicy};
    use crate::model::brute_force_posteriors;

    #[test]
    fn exact_on_polytrees_within_diameter_plus_one() {
        for seed in 0..10 {
            let net = random_polytree(12, seed);
            let e = pick_evidence(&net, EvidencePolicy::Any, (seed % 3) as usize, seed + 40)
                .unwrap();
            let exact = brute_force_posteriors(&net, &e, None).unwrap();
            let r = ibp_posteriors(&net, &e, IbpConfig::default());
            assert!(r.converged, "seed {seed}");
            assert!(
                r.iterations <= skeleton_diameter(&net) + 1,
                "seed {seed}: {} iterations for diameter {}",
                r.iterations,
                skeleton_diameter(&net)
            );
            for v in 0..net.num_variables() {
                for (a, b) in r.marginals.get(v).iter().zip(exact.get(v)) {
                    assert!((a - b).abs() < 1e-9, "seed {seed} var {v}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn evidence_variables_become_degenerate() {
        let net = demo_network();
        let e = Evidence::from_pairs([(crate::demo::E, 1), (crate::demo::G, 0)]);
        let r = ibp_posteriors(&net, &e, IbpConfig::default());
        assert_eq!(r.marginals.get(crate::demo::E)[1], 1.0);
        assert_eq!(r.marginals.get(crate::demo::G)[0], 1.0);
        for v in 0..7 {
            let s: f64 = r.marginals.get(v).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loopy_network_stays_normalized_and_reports_iterations() {
        let net = demo_network();
        let e = Evidence::from_pairs([(crate::demo::E, 1)]);
        let r = ibp_posteriors(&net, &e, IbpConfig::default());
        assert!(r.iterations <= 25);
        assert!(r.zero_beliefs.is_empty());
        // The demo network is loopy, so IBP is approximate here; it should
        // still land near the exact posterior.
        let exact = crate::exact::jtc_posteriors(&net, &e).unwrap();
        for v in 0..7 {
            for (a, b) in r.marginals.get(v).iter().zip(exact.get(v)) {
                assert!((a - b).abs() < 0.1, "var {v}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let net = demo_network();
        let e = Evidence::from_pairs([(crate::demo::E, 1)]);
        let r = ibp_posteriors(&net, &e, IbpConfig { max_iters: 1, tol: 1e-8 });
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn impossible_evidence_flags_zero_beliefs() {
        use crate::model::{Cpt, Network, Variable};
        let var = |n: &str| Variable { name: n.into(), states: vec!["0".into(), "1".into()] };
        let net = Network::new(
            vec![var("A"), var("B"), var("C")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt {
                    child: 2,
                    parents: vec![0, 1],
                    table: vec![
                        vec![1.0, 0.0],
                        vec![1.0, 0.0],
                        vec![1.0, 0.0],
                        vec![0.0, 1.0],
                    ],
                },
            ],
        )
        .unwrap();
        // C = A AND B, but A is observed false and C observed true.
        let e = Evidence::from_pairs([(0, 0), (2, 1)]);
        let r = ibp_posteriors(&net, &e, IbpConfig::default());
        assert!(!r.zero_beliefs.is_empty());
        for v in 0..3 {
            assert!(r.marginals.get(v).iter().all(|p| p.is_finite()));
        }
    }

    #[test]
    fn diameter_of_chain_and_star() {
        use crate::model::{Cpt, Network, Variable};
        let var = |n: &str| Variable { name: n.into(), states: vec!["0".into(), "1".into()] };
        // Chain of 4: diameter 3.
        let chain = Network::new(
            vec![var("A"), var("B"), var("C"), var("D")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![0.5, 0.5]; 2] },
                Cpt { child: 2, parents: vec![1], table: vec![vec![0.5, 0.5]; 2] },
                Cpt { child: 3, parents: vec![2], table: vec![vec![0.5, 0.5]; 2] },
            ],
        )
        .unwrap();
        assert_eq!(skeleton_diameter(&chain), 3);
        // Star: one root with three children, diameter 2.
        let star = Network::new(
            vec![var("R"), var("X"), var("Y"), var("Z")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![0.5, 0.5]; 2] },
                Cpt { child: 2, parents: vec![0], table: vec![vec![0.5, 0.5]; 2] },
                Cpt { child: 3, parents: vec![0], table: vec![vec![0.5, 0.5]; 2] },
            ],
        )
        .unwrap();
        assert_eq!(skeleton_diameter(&star), 2);
    }
}
