//! Samplers: plain Gibbs, cutset-based Gibbs (naive and message-caching),
//! likelihood weighting, and adaptive importance sampling, together with
//! the shared chain plumbing — configuration, initialization, estimator
//! accumulation, and cross-chain pooling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SampleError;
use crate::generators::sample_index;
use crate::model::{Assignment, Evidence, Marginals, Network};
use crate::propagation::{ibp_posteriors, IbpConfig};

pub mod cutset;
pub mod gibbs;
pub mod importance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanOrder {
    /// Update every sampled variable once per sample, in index order.
    Systematic,
    /// Pick variables uniformly at random; one sample still spends one
    /// update per sampled variable, so sample counts stay comparable.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Draw each sampled variable independently from its belief under
    /// iterative belief propagation.
    Ibp,
    /// Draw each sampled variable uniformly.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Average the full conditional distributions (Rao-Blackwellised).
    Mixture,
    /// Count visited states.
    Histogram,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplingConfig {
    /// Number of independent chains M.
    pub chains: usize,
    /// Samples per chain T; one sample is one full scan.
    pub samples: usize,
    /// Burn-in samples discarded at the start of each chain.
    pub burn_in: usize,
    pub scan: ScanOrder,
    pub seed: u64,
    pub init: InitMode,
    pub estimator: EstimatorKind,
    /// For cutset sampling: evaluate the non-cutset marginals only on every
    /// k-th sample.
    pub residual_every: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            chains: 1,
            samples: 1000,
            burn_in: 0,
            scan: ScanOrder::Systematic,
            seed: 0,
            init: InitMode::Ibp,
            estimator: EstimatorKind::Mixture,
            residual_every: 1,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), SampleError> {
        if self.chains < 1 {
            return Err(SampleError::BadConfig("chains must be at least 1".into()));
        }
        if self.samples < 1 {
            return Err(SampleError::BadConfig("samples must be at least 1".into()));
        }
        if self.residual_every < 1 {
            return Err(SampleError::BadConfig("residual-every must be at least 1".into()));
        }
        Ok(())
    }

    /// The deterministic random stream for one chain: every chain shares
    /// the seed but owns stream `chain`.
    pub fn chain_rng(&self, chain: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chain as u64);
        rng
    }
}

/// Everything a sampler reports: per-chain estimates, their pooled mean,
/// and run diagnostics.
#[derive(Debug, Clone)]
pub struct SamplerResult {
    pub per_chain: Vec<Marginals>,
    /// Componentwise mean of the per-chain estimates.
    pub pooled: Marginals,
    /// Samples generated per second, wall clock, all chains together.
    pub rate: f64,
    /// Distinct sampled tuples across all chains (cutset samplers only).
    pub unique_tuples: Option<u64>,
    /// Scan steps whose conditional distribution had zero mass; the chain
    /// kept its current value.
    pub dead_ends: u64,
    /// Mean directed messages recomputed per sample (message-caching cutset
    /// sampler only).
    pub messages_per_sample: Option<f64>,
}

/// P(x_i | markov blanket of i): the variable's own CPT row times its
/// children's rows, normalized. Returns `None` when every state has zero
/// mass (a deterministic dead end).
pub fn markov_blanket_distribution(
    net: &Network,
    i: usize,
    x: &Assignment,
) -> Option<Vec<f64>> {
    let card = net.cardinality(i);
    let value_at = |xi: usize, j: usize| -> usize {
        if j == i {
            xi
        } else {
            x.get(j).expect("assignment must be total")
        }
    };
    let mut out = vec![0.0; card];
    for (xi, slot) in out.iter_mut().enumerate() {
        let mut p = net.cpts[i].prob(net, xi, |j| value_at(xi, j));
        for &c in net.children(i) {
            if p == 0.0 {
                break;
            }
            p *= net.cpts[c].prob(net, value_at(xi, c), |j| value_at(xi, j));
        }
        *slot = p;
    }
    let total: f64 = out.iter().sum();
    if total <= 0.0 {
        return None;
    }
    out.iter_mut().for_each(|p| *p /= total);
    Some(out)
}

/// Draws an initial assignment: evidence clamped, each variable in
/// `sampled` drawn in ascending order from either its IBP belief or the
/// uniform distribution.
pub fn initialize_chain(
    net: &Network,
    e: &Evidence,
    sampled: &[usize],
    mode: InitMode,
    rng: &mut ChaCha8Rng,
) -> Assignment {
    let beliefs = match mode {
        InitMode::Ibp => Some(ibp_posteriors(net, e, IbpConfig::default()).marginals),
        InitMode::UniformRandom => None,
    };
    let mut a = Assignment::from_evidence(net.num_variables(), e);
    for &v in sampled {
        let s = match &beliefs {
            Some(m) => sample_index(m.get(v), rng.random()),
            None => rng.random_range(0..net.cardinality(v)),
        };
        a.set(v, s);
    }
    a
}

/// Attempts allowed when searching for a positive-probability initial
/// state.
pub const INIT_ATTEMPTS: usize = 100;

/// Per-variable running estimate: distribution sums for the mixture
/// estimator, state counts for the histogram estimator; each variable
/// carries its own sample counter so estimators with different cadences
/// can share one accumulator.
#[derive(Debug, Clone)]
pub struct EstimatorAccumulator {
    sums: Vec<Vec<f64>>,
    counts: Vec<u64>,
}

impl EstimatorAccumulator {
    pub fn new(net: &Network) -> Self {
        EstimatorAccumulator {
            sums: (0..net.num_variables())
                .map(|v| vec![0.0; net.cardinality(v)])
                .collect(),
            counts: vec![0; net.num_variables()],
        }
    }

    /// Mixture update: add a full conditional distribution for `var`.
    pub fn add_distribution(&mut self, var: usize, dist: &[f64]) {
        for (s, d) in self.sums[var].iter_mut().zip(dist) {
            *s += d;
        }
        self.counts[var] += 1;
    }

    /// Histogram update: count one visit of `state`.
    pub fn add_count(&mut self, var: usize, state: usize) {
        self.sums[var][state] += 1.0;
        self.counts[var] += 1;
    }

    pub fn count(&self, var: usize) -> u64 {
        self.counts[var]
    }

    /// Normalized estimate for `var`; uniform if nothing was accumulated.
    pub fn estimate(&self, var: usize) -> Vec<f64> {
        let c = self.counts[var];
        if c == 0 {
            return vec![1.0 / self.sums[var].len() as f64; self.sums[var].len()];
        }
        self.sums[var].iter().map(|s| s / c as f64).collect()
    }

    /// Assembles per-chain marginals: accumulated estimates for sampled
    /// variables, degenerate vectors for evidence.
    pub fn into_marginals(self, net: &Network, e: &Evidence) -> Marginals {
        let tables = (0..net.num_variables())
            .map(|v| match e.get(v) {
                Some(s) => {
                    let mut t = vec![0.0; net.cardinality(v)];
                    t[s] = 1.0;
                    t
                }
                None => self.estimate(v),
            })
            .collect();
        Marginals { tables, evidence_probability: None }
    }
}

/// Componentwise mean of per-chain marginals (and of the per-chain
/// evidence-probability estimates when every chain has one).
pub fn pool_chains(per_chain: &[Marginals]) -> Marginals {
    let m = per_chain.len() as f64;
    let first = &per_chain[0];
    let tables = (0..first.tables.len())
        .map(|v| {
            let mut t = vec![0.0; first.tables[v].len()];
            for chain in per_chain {
                for (a, b) in t.iter_mut().zip(&chain.tables[v]) {
                    *a += b / m;
                }
            }
            t
        })
        .collect();
    let evidence_probability = per_chain
        .iter()
        .map(|c| c.evidence_probability)
        .try_fold(0.0, |acc, p| p.map(|p| acc + p / m));
    Marginals { tables, evidence_probability }
}

/// The variables a full-space Gibbs sampler updates: everything unobserved.
pub fn unobserved(net: &Network, e: &Evidence) -> Vec<usize> {
    (0..net.num_variables()).filter(|&v| !e.contains(v)).collect()
}
