//! Cutset sampling: Gibbs over the cutset variables only, with the
//! remaining (singly connected or bounded-width) part handled exactly by
//! conditioned join-tree propagation.
//!
//! Two execution modes share one scan loop and consume randomness
//! identically, so they produce the same trajectories. The naive mode
//! recomputes every conditional from scratch; the incremental mode keeps
//! one engine per chain whose cached messages are invalidated only where an
//! assignment change actually lands, and buffers the joint probability of
//! the current state so each member costs d − 1 fresh evaluations.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;

use crate::error::SampleError;
use crate::generators::sample_index;
use crate::graph::cutset::Cutset;
use crate::graph::jointree::{build_join_tree, JoinTree};
use crate::model::{Evidence, Marginals, Network};
use crate::sampling::{
    initialize_chain, pool_chains, EstimatorAccumulator, EstimatorKind, SamplerResult,
    SamplingConfig, ScanOrder, INIT_ATTEMPTS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutsetMode {
    /// Every conditional from scratch: d full propagations per member and
    /// one full posterior pass per sample. The reference implementation.
    Naive,
    /// Cached messages with reachability-based invalidation.
    Incremental,
}

/// The per-member schedule: members ordered by the depth-first position of
/// the clusters that contain them, and the cluster each member's joints are
/// evaluated at.
struct MemberPlan {
    /// Cutset members in scan order.
    order: Vec<usize>,
    /// Evaluation site per member: the tree root for the first member (its
    /// messages double as the final-pass cache), the deepest containing
    /// cluster for the rest.
    sites: Vec<usize>,
}

fn plan_members(tree: &JoinTree, members: &BTreeSet<usize>) -> MemberPlan {
    let rooted = tree.rooted(0);
    let mut position = vec![0usize; tree.num_clusters()];
    for (i, &c) in rooted.preorder.iter().enumerate() {
        position[c] = i;
    }
    let mut keyed: Vec<(usize, usize)> = members
        .iter()
        .map(|&m| {
            let first = tree
                .clusters_containing(m)
                .iter()
                .map(|&c| position[c])
                .min()
                .expect("cutset member missing from the join tree");
            (first, m)
        })
        .collect();
    keyed.sort_unstable();
    let order: Vec<usize> = keyed.iter().map(|&(_, m)| m).collect();
    let sites = order
        .iter()
        .enumerate()
        .map(|(idx, &m)| {
            if idx == 0 {
                return rooted.root;
            }
            tree.clusters_containing(m)
                .into_iter()
                .max_by_key(|&c| (rooted.depth[c], usize::MAX - c))
                .unwrap()
        })
        .collect();
    MemberPlan { order, sites }
}

/// Runs M independent cutset-sampling chains and pools their estimates.
///
/// Per sample (= one scan), each member in depth-first order is resampled
/// from P(member | other members, e) — the Rao-Blackwellised conditional
/// computed exactly on the conditioned join tree — and that full conditional
/// is accumulated for the member's estimate. Marginals of the non-cutset
/// variables come from the conditioned beliefs of the completed sample
/// (every `residual_every`-th sample).
pub fn cutset_gibbs_run(
    net: &Network,
    e: &Evidence,
    cutset: &Cutset,
    cfg: &SamplingConfig,
    mode: CutsetMode,
) -> Result<SamplerResult, SampleError> {
    cfg.validate()?;
    if cutset.members.iter().any(|v| e.contains(*v)) {
        return Err(SampleError::BadConfig("cutset overlaps evidence".into()));
    }
    let mut conditioned: BTreeSet<usize> = cutset.members.clone();
    conditioned.extend(e.variables());
    let tree = build_join_tree(net, &conditioned);
    let plan = plan_members(&tree, &cutset.members);

    let start = std::time::Instant::now();
    let chains: Vec<ChainOutput> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| run_chain(net, e, cfg, mode, &tree, &plan, chain))
        .collect::<Result<_, _>>()?;
    let elapsed = start.elapsed().as_secs_f64();

    let per_chain: Vec<Marginals> = chains.iter().map(|c| c.marginals.clone()).collect();
    let mut tuples: BTreeSet<Vec<usize>> = BTreeSet::new();
    for c in &chains {
        tuples.extend(c.tuples.iter().cloned());
    }
    let dead_ends = chains.iter().map(|c| c.dead_ends).sum();
    let messages: u64 = chains.iter().map(|c| c.messages).sum();
    let total_samples = (cfg.chains * (cfg.burn_in + cfg.samples)) as f64;
    Ok(SamplerResult {
        pooled: pool_chains(&per_chain),
        per_chain,
        rate: (cfg.chains * cfg.samples) as f64 / elapsed.max(1e-12),
        unique_tuples: Some(tuples.len() as u64),
        dead_ends,
        messages_per_sample: match mode {
            CutsetMode::Incremental => Some(messages as f64 / total_samples),
            CutsetMode::Naive => None,
        },
    })
}

struct ChainOutput {
    marginals: Marginals,
    tuples: BTreeSet<Vec<usize>>,
    dead_ends: u64,
    messages: u64,
}

fn run_chain(
    net: &Network,
    e: &Evidence,
    cfg: &SamplingConfig,
    mode: CutsetMode,
    tree: &JoinTree,
    plan: &MemberPlan,
    chain: usize,
) -> Result<ChainOutput, SampleError> {
    let mut rng = cfg.chain_rng(chain);
    let members_ascending: Vec<usize> = {
        let mut m = plan.order.clone();
        m.sort_unstable();
        m
    };

    let mut kernel = match mode {
        CutsetMode::Naive => Kernel::Naive { ev_all: e.clone() },
        CutsetMode::Incremental => {
            let mut engine = crate::exact::ConditionedEngine::new(net, tree)?;
            for (&v, &s) in e.iter() {
                engine.set_value(v, s);
            }
            Kernel::Incremental { engine, ln_current: f64::NEG_INFINITY }
        }
    };

    // Values aligned with plan.order.
    let mut values = 'init: {
        for _ in 0..INIT_ATTEMPTS {
            let a = initialize_chain(net, e, &members_ascending, cfg.init, &mut rng);
            let vals: Vec<usize> =
                plan.order.iter().map(|&m| a.get(m).expect("member drawn")).collect();
            if kernel.start(net, e, plan, &vals)? {
                break 'init vals;
            }
        }
        return Err(SampleError::InitFailed(INIT_ATTEMPTS));
    };

    let mut acc = EstimatorAccumulator::new(net);
    let mut tuples = BTreeSet::new();
    let mut dead_ends = 0u64;
    let residual: Vec<usize> = (0..net.num_variables())
        .filter(|v| !tree.conditioned.contains(v))
        .collect();

    for t in 0..cfg.burn_in + cfg.samples {
        for step in 0..plan.order.len() {
            let idx = match cfg.scan {
                ScanOrder::Systematic => step,
                ScanOrder::Random => rng.random_range(0..plan.order.len()),
            };
            let m = plan.order[idx];
            let card = net.cardinality(m);
            let ln_joints = kernel.member_joints(net, e, plan, &values, idx, card)?;
            let max_ln = ln_joints.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max_ln == f64::NEG_INFINITY {
                dead_ends += 1;
                kernel.keep(plan, &values, idx);
                continue;
            }
            let weights: Vec<f64> = ln_joints.iter().map(|l| (l - max_ln).exp()).collect();
            let total: f64 = weights.iter().sum();
            if t >= cfg.burn_in && cfg.estimator == EstimatorKind::Mixture {
                let dist: Vec<f64> = weights.iter().map(|w| w / total).collect();
                acc.add_distribution(m, &dist);
            }
            let s = sample_index(&weights, rng.random());
            kernel.commit(plan, &mut values, idx, s, ln_joints[s]);
        }

        if t < cfg.burn_in {
            continue;
        }
        if cfg.estimator == EstimatorKind::Histogram {
            for (idx, &m) in plan.order.iter().enumerate() {
                acc.add_count(m, values[idx]);
            }
        }
        tuples.insert(values.clone());
        if (t - cfg.burn_in) % cfg.residual_every == 0 {
            let beliefs = kernel.residual_beliefs(net)?;
            for &v in &residual {
                acc.add_distribution(v, beliefs[v].as_ref().expect("residual variable"));
            }
        }
    }

    Ok(ChainOutput {
        marginals: acc.into_marginals(net, e),
        tuples,
        dead_ends,
        messages: kernel.messages(),
    })
}

/// The two conditional-computation strategies behind one interface. Both
/// must make the same accept/reject and value decisions from the same
/// numbers, so trajectories coincide across modes.
enum Kernel<'a> {
    Naive {
        /// Evidence plus the current member assignment.
        ev_all: Evidence,
    },
    Incremental {
        engine: crate::exact::ConditionedEngine<'a>,
        /// ln P(current members, e): the buffered joint, reused as the
        /// current value's weight so only d − 1 evaluations are fresh.
        ln_current: f64,
    },
}

impl Kernel<'_> {
    /// Loads an initial member assignment; Ok(false) if it has zero
    /// probability.
    fn start(
        &mut self,
        net: &Network,
        e: &Evidence,
        plan: &MemberPlan,
        values: &[usize],
    ) -> Result<bool, SampleError> {
        match self {
            Kernel::Naive { ev_all } => {
                *ev_all = e.clone();
                for (&m, &v) in plan.order.iter().zip(values) {
                    ev_all.bind(m, v);
                }
                Ok(crate::exact::evidence_probability(net, ev_all)? > 0.0)
            }
            Kernel::Incremental { engine, ln_current } => {
                for (&m, &v) in plan.order.iter().zip(values) {
                    engine.set_value(m, v);
                }
                *ln_current = engine.ln_joint_at(0);
                Ok(*ln_current > f64::NEG_INFINITY)
            }
        }
    }

    /// ln P(member idx = v, other members, e) for every value v.
    fn member_joints(
        &mut self,
        net: &Network,
        e: &Evidence,
        plan: &MemberPlan,
        values: &[usize],
        idx: usize,
        card: usize,
    ) -> Result<Vec<f64>, SampleError> {
        match self {
            Kernel::Naive { .. } => {
                let p = crate::exact::conditioned_cutset_distribution(
                    net,
                    e,
                    &plan.order,
                    values,
                    idx,
                )?;
                Ok(p.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect())
            }
            Kernel::Incremental { engine, ln_current } => {
                let mut out = vec![f64::NEG_INFINITY; card];
                out[values[idx]] = *ln_current;
                for v in 0..card {
                    if v != values[idx] {
                        engine.set_value(plan.order[idx], v);
                        out[v] = engine.ln_joint_at(plan.sites[idx]);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Re-establishes the current value after a dead-ended member (only the
    /// incremental engine holds state that needs rewinding).
    fn keep(&mut self, plan: &MemberPlan, values: &[usize], idx: usize) {
        if let Kernel::Incremental { engine, .. } = self {
            engine.set_value(plan.order[idx], values[idx]);
        }
    }

    /// Records the sampled value.
    fn commit(
        &mut self,
        plan: &MemberPlan,
        values: &mut [usize],
        idx: usize,
        s: usize,
        ln_joint: f64,
    ) {
        let m = plan.order[idx];
        match self {
            Kernel::Naive { ev_all } => {
                ev_all.bind(m, s);
            }
            Kernel::Incremental { engine, ln_current } => {
                engine.set_value(m, s);
                *ln_current = ln_joint;
            }
        }
        values[idx] = s;
    }

    /// P(x | members, e) for every residual variable at the completed
    /// sample.
    fn residual_beliefs(&mut self, net: &Network) -> Result<Vec<Option<Vec<f64>>>, SampleError> {
        match self {
            Kernel::Naive { ev_all } => {
                let m = crate::exact::jtc_posteriors(net, ev_all)?;
                Ok((0..net.num_variables())
                    .map(|v| {
                        if ev_all.contains(v) {
                            None
                        } else {
                            Some(m.get(v).to_vec())
                        }
                    })
                    .collect())
            }
            Kernel::Incremental { engine, .. } => Ok(engine.residual_marginals()?),
        }
    }

    fn messages(&self) -> u64 {
        match self {
            Kernel::Naive { .. } => 0,
            Kernel::Incremental { engine, .. } => engine.messages_computed(),
        }
    }
}
