//! Seeded benchmark network families: multipartite random networks, two-layer
//! noisy networks, directed grids, and parity-check coding networks, plus
//! evidence selection and small random-structure helpers for tests.
//!
//! All generators draw from a single ChaCha stream seeded by the spec's seed,
//! in a fixed order (structure first, then CPT rows, then any simulated
//! evidence), so a spec maps to one byte-identical network file.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GenError;
use crate::model::{Cpt, Evidence, Network, Variable};

/// A generation request. `generate` maps each spec to a network (and, for
/// coding networks, channel-output evidence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GenSpec {
    /// `roots` parentless variables followed by `total - roots` variables
    /// with `parents` random predecessors each.
    Multipartite { roots: usize, total: usize, parents: usize, seed: u64 },
    /// Bipartite: `roots` priors, `leaves` children with 1–3 root parents.
    TwoLayer { roots: usize, leaves: usize, seed: u64 },
    /// Directed grid; node (r,c) has parents (r−1,c) and (r,c−1).
    Grid { rows: usize, cols: usize, seed: u64 },
    /// `code_bits` uniform roots, as many XOR parity bits, and one noisy
    /// channel output per code/parity bit (flip probability from `sigma`).
    Coding { code_bits: usize, sigma: f64, seed: u64 },
}

/// Runs a generation spec. The evidence is empty for every family except
/// coding, where all transmitted bits are observed.
pub fn generate(spec: &GenSpec) -> Result<(Network, Evidence), GenError> {
    match *spec {
        GenSpec::Multipartite { roots, total, parents, seed } => {
            Ok((gen_multipartite(roots, total, parents, seed)?, Evidence::new()))
        }
        GenSpec::TwoLayer { roots, leaves, seed } => {
            Ok((gen_two_layer(roots, leaves, seed)?, Evidence::new()))
        }
        GenSpec::Grid { rows, cols, seed } => Ok((gen_grid(rows, cols, seed)?, Evidence::new())),
        GenSpec::Coding { code_bits, sigma, seed } => gen_coding(code_bits, sigma, seed),
    }
}

fn binary_var(name: String) -> Variable {
    Variable { name, states: vec!["0".into(), "1".into()] }
}

/// A random binary CPT row [u, 1−u] with u uniform in (0, 1).
fn random_row(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let u = rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12);
    vec![u, 1.0 - u]
}

/// Multipartite random network: the first `roots` variables have uniform
/// priors; every later variable receives `parents` distinct parents chosen
/// uniformly among its predecessors and a random CPT row per configuration.
pub fn gen_multipartite(
    roots: usize,
    total: usize,
    parents: usize,
    seed: u64,
) -> Result<Network, GenError> {
    if roots == 0 || total < roots {
        return Err(GenError::Invalid(format!(
            "need 1 <= roots <= total, got roots={roots}, total={total}"
        )));
    }
    if total > roots && (parents == 0 || parents > roots) {
        return Err(GenError::Invalid(format!(
            "need 1 <= parents <= roots, got parents={parents}, roots={roots}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variables: Vec<Variable> = (0..total).map(|i| binary_var(format!("X{i}"))).collect();
    let mut cpts = Vec::with_capacity(total);
    for i in 0..total {
        if i < roots {
            cpts.push(Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] });
        } else {
            let mut pool: Vec<usize> = (0..i).collect();
            let (chosen, _) = pool.partial_shuffle(&mut rng, parents);
            let mut ps = chosen.to_vec();
            ps.sort_unstable();
            let rows = 1usize << ps.len();
            let table = (0..rows).map(|_| random_row(&mut rng)).collect();
            cpts.push(Cpt { child: i, parents: ps, table });
        }
    }
    Ok(Network::new(variables, cpts).expect("generated network is valid"))
}

/// Two-layer network: `roots` uniform priors and `leaves` children, each
/// with 1–3 distinct root parents (capped at the number of roots).
pub fn gen_two_layer(roots: usize, leaves: usize, seed: u64) -> Result<Network, GenError> {
    if roots == 0 || leaves == 0 {
        return Err(GenError::Invalid(format!(
            "need roots >= 1 and leaves >= 1, got roots={roots}, leaves={leaves}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut variables: Vec<Variable> = (0..roots).map(|i| binary_var(format!("R{i}"))).collect();
    variables.extend((0..leaves).map(|i| binary_var(format!("L{i}"))));
    let mut cpts: Vec<Cpt> = (0..roots)
        .map(|i| Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] })
        .collect();
    for j in 0..leaves {
        let count = rng.random_range(1..=3usize).min(roots);
        let mut pool: Vec<usize> = (0..roots).collect();
        let (chosen, _) = pool.partial_shuffle(&mut rng, count);
        let mut ps = chosen.to_vec();
        ps.sort_unstable();
        let rows = 1usize << ps.len();
        let table = (0..rows).map(|_| random_row(&mut rng)).collect();
        cpts.push(Cpt { child: roots + j, parents: ps, table });
    }
    Ok(Network::new(variables, cpts).expect("generated network is valid"))
}

/// Directed grid network with `rows * cols` binary variables. Node (r,c)
/// sits at index `r*cols + c` with parents (r−1,c) then (r,c−1).
pub fn gen_grid(rows: usize, cols: usize, seed: u64) -> Result<Network, GenError> {
    if rows < 2 || cols < 2 {
        return Err(GenError::Invalid(format!("need rows, cols >= 2, got {rows}x{cols}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variables: Vec<Variable> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| binary_var(format!("N{r}_{c}"))))
        .collect();
    let mut cpts = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut parents = Vec::new();
            if r > 0 {
                parents.push((r - 1) * cols + c);
            }
            if c > 0 {
                parents.push(r * cols + c - 1);
            }
            let table = if parents.is_empty() {
                vec![vec![0.5, 0.5]]
            } else {
                (0..1usize << parents.len()).map(|_| random_row(&mut rng)).collect()
            };
            cpts.push(Cpt { child: r * cols + c, parents, table });
        }
    }
    Ok(Network::new(variables, cpts).expect("generated network is valid"))
}

/// Error function, Abramowitz & Stegun approximation 7.1.26 (max absolute
/// error 1.5e-7), extended to negative arguments by symmetry.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Channel flip probability for noise level `sigma`: the misclassification
/// probability of a unit-separated Gaussian channel thresholded at the
/// midpoint, p = Φ(−0.5/σ). At σ = 0.4 this is ≈ 0.1056.
pub fn flip_probability(sigma: f64) -> f64 {
    std_normal_cdf(-0.5 / sigma)
}

/// Coding network: `code_bits` uniform roots U_i, as many parity bits P_j
/// (each a deterministic XOR of 3 distinct random code bits), and one noisy
/// transmitted bit per code/parity bit. Returns the network together with
/// evidence on all transmitted bits, obtained by sending a random codeword
/// through the channel.
pub fn gen_coding(code_bits: usize, sigma: f64, seed: u64) -> Result<(Network, Evidence), GenError> {
    if code_bits < 3 {
        return Err(GenError::Invalid(format!("need code_bits >= 3, got {code_bits}")));
    }
    if !(sigma > 0.0) {
        return Err(GenError::Invalid(format!("need sigma > 0, got {sigma}")));
    }
    let k = code_bits;
    let p = flip_probability(sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Indices: code bits 0..k, parity bits k..2k, transmitted code bits
    // 2k..3k, transmitted parity bits 3k..4k.
    let mut variables = Vec::with_capacity(4 * k);
    variables.extend((0..k).map(|i| binary_var(format!("U{i}"))));
    variables.extend((0..k).map(|i| binary_var(format!("P{i}"))));
    variables.extend((0..k).map(|i| binary_var(format!("YU{i}"))));
    variables.extend((0..k).map(|i| binary_var(format!("YP{i}"))));

    let mut cpts = Vec::with_capacity(4 * k);
    for i in 0..k {
        cpts.push(Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] });
    }
    let mut parity_parents = Vec::with_capacity(k);
    for j in 0..k {
        let mut pool: Vec<usize> = (0..k).collect();
        let (chosen, _) = pool.partial_shuffle(&mut rng, 3);
        let mut ps = chosen.to_vec();
        ps.sort_unstable();
        // Row r encodes the three parent bits, first parent most
        // significant; the parity bit is their XOR.
        let table: Vec<Vec<f64>> = (0..8usize)
            .map(|r| {
                let ones = (r & 1) + ((r >> 1) & 1) + ((r >> 2) & 1);
                if ones % 2 == 1 { vec![0.0, 1.0] } else { vec![1.0, 0.0] }
            })
            .collect();
        cpts.push(Cpt { child: k + j, parents: ps.clone(), table });
        parity_parents.push(ps);
    }
    let channel_rows = vec![vec![1.0 - p, p], vec![p, 1.0 - p]];
    for i in 0..2 * k {
        cpts.push(Cpt { child: 2 * k + i, parents: vec![i], table: channel_rows.clone() });
    }
    let net = Network::new(variables, cpts).expect("generated network is valid");

    // Simulate one transmission: random codeword, deterministic parities,
    // independent channel flips in transmitted-bit index order.
    let code: Vec<usize> = (0..k).map(|_| rng.random_range(0..2usize)).collect();
    let parity: Vec<usize> =
        parity_parents.iter().map(|ps| ps.iter().map(|&b| code[b]).sum::<usize>() % 2).collect();
    let mut e = Evidence::new();
    for i in 0..k {
        let sent = code[i];
        let received = if rng.random::<f64>() < p { 1 - sent } else { sent };
        e.bind(2 * k + i, received);
    }
    for j in 0..k {
        let sent = parity[j];
        let received = if rng.random::<f64>() < p { 1 - sent } else { sent };
        e.bind(3 * k + j, received);
    }
    Ok((net, e))
}

/// Which variables qualify for random evidence selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidencePolicy {
    /// Only childless variables.
    Leaves,
    /// Any variable.
    Any,
}

/// Chooses `count` evidence variables uniformly without replacement under
/// `policy`, then assigns values by forward-sampling the network once, which
/// guarantees P(e) > 0.
pub fn pick_evidence(
    net: &Network,
    policy: EvidencePolicy,
    count: usize,
    seed: u64,
) -> Result<Evidence, GenError> {
    let mut eligible: Vec<usize> = (0..net.num_variables())
        .filter(|&v| match policy {
            EvidencePolicy::Leaves => net.children(v).is_empty(),
            EvidencePolicy::Any => true,
        })
        .collect();
    if count > eligible.len() {
        return Err(GenError::Invalid(format!(
            "requested {count} evidence variables but only {} are eligible",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = eligible.partial_shuffle(&mut rng, count);
    let chosen: BTreeSet<usize> = chosen.iter().copied().collect();
    let sample = forward_sample(net, &mut rng);
    Ok(Evidence::from_pairs(chosen.into_iter().map(|v| (v, sample[v]))))
}

/// One ancestral sample: values drawn in topological order from each CPT.
pub fn forward_sample(net: &Network, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut values = vec![0usize; net.num_variables()];
    for &v in net.topological_order() {
        let cpt = &net.cpts[v];
        let row = &cpt.table[cpt.row_index(net, |p| values[p])];
        values[v] = sample_index(row, rng.random::<f64>());
    }
    values
}

/// Inverse-CDF draw from an unnormalized nonnegative vector, u in [0,1).
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u * total < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Random DAG helper for tests and desk suites: each pair (i, j), i < j, is
/// an edge with probability `edge_prob`, parents capped at `max_parents`;
/// domains binary; CPT entries kept inside [0.05, 0.95] so every assignment
/// has positive probability.
pub fn random_dag(n: usize, edge_prob: f64, max_parents: usize, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variables: Vec<Variable> = (0..n).map(|i| binary_var(format!("X{i}"))).collect();
    let mut cpts = Vec::with_capacity(n);
    for j in 0..n {
        let mut parents = Vec::new();
        for i in 0..j {
            if parents.len() < max_parents && rng.random::<f64>() < edge_prob {
                parents.push(i);
            }
        }
        let rows = 1usize << parents.len();
        let table: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                let u = 0.05 + 0.9 * rng.random::<f64>();
                vec![u, 1.0 - u]
            })
            .collect();
        cpts.push(Cpt { child: j, parents, table });
    }
    Network::new(variables, cpts).expect("generated network is valid")
}

/// Random polytree helper: a uniform random tree over `n` nodes with every
/// edge oriented at random, binary or ternary domains, positive CPTs.
pub fn random_polytree(n: usize, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..n).map(|_| if rng.random::<f64>() < 0.3 { 3 } else { 2 }).collect();
    let variables: Vec<Variable> = (0..n)
        .map(|i| Variable {
            name: format!("X{i}"),
            states: (0..cards[i]).map(|s| s.to_string()).collect(),
        })
        .collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 1..n {
        let attach = rng.random_range(0..j);
        if rng.random::<f64>() < 0.5 {
            parents[j].push(attach);
        } else {
            parents[attach].push(j);
        }
    }
    // Orienting tree edges at random can direct an edge from a higher to a
    // lower index, which is still acyclic: a tree with any orientation has
    // no directed cycle because it has no undirected cycle.
    let mut cpts = Vec::with_capacity(n);
    for j in 0..n {
        parents[j].sort_unstable();
        let rows: usize = parents[j].iter().map(|&p| cards[p]).product();
        let table: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                let mut row: Vec<f64> = (0..cards[j]).map(|_| 0.1 + rng.random::<f64>()).collect();
                let s: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= s;
                }
                row
            })
            .collect();
        cpts.push(Cpt { child: j, parents: parents[j].clone(), table });
    }
    Network::new(variables, cpts).expect("generated network is valid")
}
