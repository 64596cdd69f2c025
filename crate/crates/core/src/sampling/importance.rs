//! Importance sampling: likelihood weighting from the model's own tables,
//! and an adaptive variant that learns its sampling tables as it runs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::SampleError;
use crate::generators::sample_index;
use crate::model::{Evidence, Marginals, Network};
use crate::sampling::{pool_chains, SamplerResult, SamplingConfig};

/// Per-variable sampling tables, shaped exactly like the network's own.
type LearnedTables = Vec<Vec<Vec<f64>>>;

/// Runs M independent likelihood-weighting chains and pools the estimates.
///
/// Each sample is drawn in topological order from the network's own tables
/// with evidence clamped; its weight is the product of the evidence
/// variables' table entries. Estimates are weighted state frequencies, so
/// `estimator`, `burn_in`, and `scan` do not apply — the draws are
/// independent. Each chain's mean weight estimates P(e).
pub fn likelihood_weighting_run(
    net: &Network,
    e: &Evidence,
    cfg: &SamplingConfig,
) -> Result<SamplerResult, SampleError> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let per_chain: Vec<Marginals> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| lw_chain(net, e, cfg, chain))
        .collect::<Result<_, _>>()?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(SamplerResult {
        pooled: pool_chains(&per_chain),
        per_chain,
        rate: (cfg.chains * cfg.samples) as f64 / elapsed.max(1e-12),
        unique_tuples: None,
        dead_ends: 0,
        messages_per_sample: None,
    })
}

fn lw_chain(
    net: &Network,
    e: &Evidence,
    cfg: &SamplingConfig,
    chain: usize,
) -> Result<Marginals, SampleError> {
    let mut rng = cfg.chain_rng(chain);
    let n = net.num_variables();
    let mut values = vec![0usize; n];
    let mut sums: Vec<Vec<f64>> = (0..n).map(|v| vec![0.0; net.cardinality(v)]).collect();
    let mut total = 0.0f64;
    for _ in 0..cfg.samples {
        let w = draw_weighted(net, e, None, &mut values, &mut rng);
        if w > 0.0 {
            total += w;
            for (v, &s) in values.iter().enumerate() {
                sums[v][s] += w;
            }
        }
    }
    weighted_marginals(net, e, &sums, total, cfg.samples)
}

/// One topological-order draw with evidence clamped, drawing unobserved
/// variables from `q` when given and from the model itself otherwise.
/// Returns the sample's importance weight P(x, e)/Q(x), which reduces to
/// ∏_j P(e_j | pa_j) when sampling from the model. The draw always runs to
/// completion so stream consumption never depends on the weights.
fn draw_weighted(
    net: &Network,
    e: &Evidence,
    q: Option<&LearnedTables>,
    values: &mut [usize],
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut w = 1.0f64;
    for &v in net.topological_order() {
        let cpt = &net.cpts[v];
        let row = cpt.row_index(net, |p| values[p]);
        match e.get(v) {
            Some(s) => {
                values[v] = s;
                w *= cpt.table[row][s];
            }
            None => match q {
                Some(tables) => {
                    let qrow = &tables[v][row];
                    let s = sample_index(qrow, rng.random());
                    values[v] = s;
                    w *= cpt.table[row][s] / qrow[s];
                }
                None => values[v] = sample_index(&cpt.table[row], rng.random()),
            },
        }
    }
    w
}

/// Normalizes weighted state counts into per-chain marginals; evidence
/// variables carry degenerate vectors and the mean weight estimates P(e).
fn weighted_marginals(
    net: &Network,
    e: &Evidence,
    sums: &[Vec<f64>],
    total: f64,
    draws: usize,
) -> Result<Marginals, SampleError> {
    if total <= 0.0 {
        return Err(SampleError::AllWeightsZero);
    }
    let tables = (0..net.num_variables())
        .map(|v| match e.get(v) {
            Some(s) => {
                let mut t = vec![0.0; net.cardinality(v)];
                t[s] = 1.0;
                t
            }
            None => sums[v].iter().map(|x| x / total).collect(),
        })
        .collect();
    Ok(Marginals { tables, evidence_probability: Some(total / draws as f64) })
}

/// Sampling tables for adaptive importance sampling plus the knobs of its
/// update rule.
#[derive(Debug, Clone)]
pub struct AisBnState {
    /// One learned table per variable; rows stay normalized and strictly
    /// positive.
    pub tables: LearnedTables,
    /// Samples drawn between table updates.
    pub update_interval: usize,
    /// Learning rate at the first update; it decays geometrically to
    /// `eta_end` at the run's last update.
    pub eta_start: f64,
    pub eta_end: f64,
    /// Minimum table entry enforced whenever a row is (re)built, keeping
    /// every assignment drawable.
    pub floor: f64,
}

impl AisBnState {
    /// The standard starting point: the network's own tables floored to
    /// strict positivity, update interval 2500, learning rate decaying
    /// 0.4 → 0.14, floor 0.0005.
    pub fn initial(net: &Network) -> Self {
        let floor = 0.0005;
        let mut tables: LearnedTables = net.cpts.iter().map(|c| c.table.clone()).collect();
        for table in &mut tables {
            for row in table.iter_mut() {
                floor_row(row, floor);
            }
        }
        AisBnState { tables, update_interval: 2500, eta_start: 0.4, eta_end: 0.14, floor }
    }

    /// η(k) for the k-th update (0-based) of `k_max + 1` total updates:
    /// geometric interpolation from `eta_start` down to `eta_end`.
    fn eta(&self, k: usize, k_max: usize) -> f64 {
        self.eta_start * (self.eta_end / self.eta_start).powf(k as f64 / k_max as f64)
    }

    fn validate(&self, net: &Network) -> Result<(), SampleError> {
        if self.update_interval < 1 {
            return Err(SampleError::BadConfig("update interval must be at least 1".into()));
        }
        if !(self.floor > 0.0 && self.floor < 0.5) {
            return Err(SampleError::BadConfig("floor must lie in (0, 0.5)".into()));
        }
        if !(self.eta_start > 0.0 && self.eta_start <= 1.0)
            || !(self.eta_end > 0.0 && self.eta_end <= 1.0)
        {
            return Err(SampleError::BadConfig("learning rates must lie in (0, 1]".into()));
        }
        if self.tables.len() != net.num_variables() {
            return Err(SampleError::BadConfig("tables do not match the network".into()));
        }
        for (v, table) in self.tables.iter().enumerate() {
            if table.len() != net.cpts[v].table.len()
                || table.iter().any(|row| row.len() != net.cardinality(v))
            {
                return Err(SampleError::BadConfig("tables do not match the network".into()));
            }
        }
        Ok(())
    }
}

/// Raises entries below `floor` and renormalizes the row.
fn floor_row(row: &mut [f64], floor: f64) {
    for x in row.iter_mut() {
        if *x < floor {
            *x = floor;
        }
    }
    let s: f64 = row.iter().sum();
    for x in row.iter_mut() {
        *x /= s;
    }
}

/// Runs M adaptive-importance-sampling chains. Each chain draws from its
/// own copy of the learned tables and, every `update_interval` samples,
/// moves each visited row toward the interval's weighted empirical
/// conditional P': P ← P + η(k)(P' − P), with η decaying geometrically
/// over the run's updates; rows without weighted hits keep their values,
/// and every rebuilt row is floored and renormalized.
///
/// Early samples come from still-unadapted tables, so estimates (including
/// the P(e) estimate) accumulate only over the second half of each chain.
/// The returned state carries the first chain's final tables, ready to
/// seed another run.
pub fn aisbn_run(
    net: &Network,
    e: &Evidence,
    cfg: &SamplingConfig,
    st: &AisBnState,
) -> Result<(SamplerResult, AisBnState), SampleError> {
    cfg.validate()?;
    st.validate(net)?;
    let start = std::time::Instant::now();
    let chains: Vec<(Marginals, LearnedTables)> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| ais_chain(net, e, cfg, st, chain))
        .collect::<Result<_, _>>()?;
    let elapsed = start.elapsed().as_secs_f64();
    let per_chain: Vec<Marginals> = chains.iter().map(|(m, _)| m.clone()).collect();
    let learned = AisBnState { tables: chains[0].1.clone(), ..st.clone() };
    let result = SamplerResult {
        pooled: pool_chains(&per_chain),
        per_chain,
        rate: (cfg.chains * cfg.samples) as f64 / elapsed.max(1e-12),
        unique_tuples: None,
        dead_ends: 0,
        messages_per_sample: None,
    };
    Ok((result, learned))
}

fn ais_chain(
    net: &Network,
    e: &Evidence,
    cfg: &SamplingConfig,
    st: &AisBnState,
    chain: usize,
) -> Result<(Marginals, LearnedTables), SampleError> {
    let mut rng = cfg.chain_rng(chain);
    let n = net.num_variables();
    let mut tables = st.tables.clone();
    let mut values = vec![0usize; n];

    // Weighted per-row state counts for the current interval.
    let mut counts: LearnedTables = tables
        .iter()
        .map(|t| t.iter().map(|row| vec![0.0; row.len()]).collect())
        .collect();
    let total_updates = cfg.samples / st.update_interval;
    let k_max = total_updates.saturating_sub(1).max(1);
    let mut k = 0usize;

    let mut sums: Vec<Vec<f64>> = (0..n).map(|v| vec![0.0; net.cardinality(v)]).collect();
    let mut total = 0.0f64;
    let estimate_from = cfg.samples / 2;
    let mut est_draws = 0usize;

    for t in 0..cfg.samples {
        let w = draw_weighted(net, e, Some(&tables), &mut values, &mut rng);
        if w > 0.0 {
            for v in 0..n {
                if !e.contains(v) {
                    let row = net.cpts[v].row_index(net, |p| values[p]);
                    counts[v][row][values[v]] += w;
                }
            }
        }
        if t >= estimate_from {
            est_draws += 1;
            if w > 0.0 {
                total += w;
                for (v, &s) in values.iter().enumerate() {
                    sums[v][s] += w;
                }
            }
        }
        if (t + 1) % st.update_interval == 0 && k < total_updates {
            let eta = st.eta(k, k_max);
            k += 1;
            for v in 0..n {
                if e.contains(v) {
                    continue;
                }
                for (qrow, crow) in tables[v].iter_mut().zip(&counts[v]) {
                    let hits: f64 = crow.iter().sum();
                    if hits <= 0.0 {
                        continue;
                    }
                    for (q, &c) in qrow.iter_mut().zip(crow) {
                        *q += eta * (c / hits - *q);
                    }
                    floor_row(qrow, st.floor);
                }
            }
            for table in &mut counts {
                for row in table.iter_mut() {
                    row.fill(0.0);
                }
            }
        }
    }
    let marginals = weighted_marginals(net, e, &sums, total, est_draws)?;
    Ok((marginals, tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::jtc_posteriors;
    use crate::generators::{forward_sample, pick_evidence, random_dag, EvidencePolicy};
    use crate::model::{Cpt, Variable};

    fn binary(n: &str) -> Variable {
        Variable { name: n.into(), states: vec!["0".into(), "1".into()] }
    }

    fn chain_ab() -> Network {
        // A→B with P(A=1)=0.6, P(B=1|A=0)=0.2, P(B=1|A=1)=0.7, so
        // P(B=1) = 0.50 and P(A=1|B=1) = 0.42/0.50 = 0.84.
        Network::new(
            vec![binary("A"), binary("B")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.4, 0.6]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![0.8, 0.2], vec![0.3, 0.7]] },
            ],
        )
        .unwrap()
    }

    fn avg_abs_error(got: &Marginals, want: &Marginals, e: &Evidence) -> f64 {
        let mut total = 0.0;
        let mut terms = 0usize;
        for v in 0..got.tables.len() {
            if e.contains(v) {
                continue;
            }
            for (a, b) in got.get(v).iter().zip(want.get(v)) {
                total += (a - b).abs();
                terms += 1;
            }
        }
        total / terms as f64
    }

    fn mse(got: &Marginals, want: &Marginals, e: &Evidence) -> f64 {
        let mut total = 0.0;
        let mut terms = 0usize;
        for v in 0..got.tables.len() {
            if e.contains(v) {
                continue;
            }
            for (a, b) in got.get(v).iter().zip(want.get(v)) {
                total += (a - b) * (a - b);
                terms += 1;
            }
        }
        total / terms as f64
    }

    #[test]
    fn no_evidence_weights_are_one_and_estimates_are_frequencies() {
        let net = random_dag(6, 0.3, 3, 2);
        let e = Evidence::new();
        let cfg = SamplingConfig { chains: 2, samples: 300, seed: 8, ..SamplingConfig::default() };
        let r = likelihood_weighting_run(&net, &e, &cfg).unwrap();
        for chain in &r.per_chain {
            assert_eq!(chain.evidence_probability, Some(1.0));
        }
        // With unit weights the estimate is exactly the forward-sampling
        // frequency of the same stream.
        let mut rng = cfg.chain_rng(0);
        let mut freq: Vec<Vec<f64>> = (0..6).map(|v| vec![0.0; net.cardinality(v)]).collect();
        for _ in 0..cfg.samples {
            let x = forward_sample(&net, &mut rng);
            for (v, &s) in x.iter().enumerate() {
                freq[v][s] += 1.0;
            }
        }
        for v in 0..6 {
            let scaled: Vec<f64> = freq[v].iter().map(|c| c / cfg.samples as f64).collect();
            assert_eq!(r.per_chain[0].get(v), scaled.as_slice());
        }
    }

    #[test]
    fn chain_mean_weight_estimates_evidence_probability() {
        // Weights take the value 0.2 with probability 0.4 and 0.7 with
        // probability 0.6: mean 0.50, standard deviation ~0.245, so three
        // standard errors at T=10000 is ~0.0074.
        let net = chain_ab();
        let e = Evidence::from_pairs([(1, 1)]);
        let cfg = SamplingConfig { samples: 10_000, seed: 3, ..SamplingConfig::default() };
        let r = likelihood_weighting_run(&net, &e, &cfg).unwrap();
        let p = r.pooled.evidence_probability.unwrap();
        assert!((p - 0.50).abs() < 0.0074, "P(e) estimate {p}");
        assert!((r.pooled.get(0)[1] - 0.84).abs() < 0.02);
    }

    #[test]
    fn leaf_evidence_estimates_converge_with_more_samples() {
        let net = random_dag(10, 0.3, 3, 5);
        let e = pick_evidence(&net, EvidencePolicy::Leaves, 2, 1).unwrap();
        let exact = jtc_posteriors(&net, &e).unwrap();
        let run = |samples| {
            let cfg = SamplingConfig { samples, seed: 17, ..SamplingConfig::default() };
            let r = likelihood_weighting_run(&net, &e, &cfg).unwrap();
            avg_abs_error(&r.pooled, &exact, &e)
        };
        let coarse = run(500);
        let fine = run(8000);
        assert!(fine < coarse, "error did not shrink: {coarse} -> {fine}");
        assert!(fine < 0.05, "error at T=8000 is {fine}");
    }

    #[test]
    fn impossible_evidence_reports_zero_weights() {
        // C is identically 0, so observing C=1 zeroes every weight.
        let net = Network::new(
            vec![binary("A"), binary("C")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.0, 1.0]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![1.0, 0.0], vec![1.0, 0.0]] },
            ],
        )
        .unwrap();
        let e = Evidence::from_pairs([(1, 1)]);
        let cfg = SamplingConfig { samples: 50, ..SamplingConfig::default() };
        assert!(matches!(
            likelihood_weighting_run(&net, &e, &cfg),
            Err(SampleError::AllWeightsZero)
        ));
    }

    #[test]
    fn learning_rate_decays_geometrically() {
        let st = AisBnState::initial(&chain_ab());
        assert!((st.eta(0, 9) - 0.4).abs() < 1e-12);
        assert!((st.eta(9, 9) - 0.14).abs() < 1e-12);
        for k in 1..=9 {
            assert!(st.eta(k, 9) < st.eta(k - 1, 9));
        }
    }

    #[test]
    fn without_evidence_tables_stay_near_the_priors() {
        // Every parent configuration here is visited often, so the update
        // targets P' are low-noise estimates of the rows themselves.
        let net = Network::new(
            vec![binary("A"), binary("B"), binary("C"), binary("D")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![], table: vec![vec![0.6, 0.4]] },
                Cpt {
                    child: 2,
                    parents: vec![0, 1],
                    table: vec![
                        vec![0.3, 0.7],
                        vec![0.6, 0.4],
                        vec![0.45, 0.55],
                        vec![0.7, 0.3],
                    ],
                },
                Cpt { child: 3, parents: vec![2], table: vec![vec![0.35, 0.65], vec![0.55, 0.45]] },
            ],
        )
        .unwrap();
        let e = Evidence::new();
        let st = AisBnState { update_interval: 1000, ..AisBnState::initial(&net) };
        let cfg = SamplingConfig { samples: 8000, seed: 21, ..SamplingConfig::default() };
        let (r, learned) = aisbn_run(&net, &e, &cfg, &st).unwrap();
        for (t, orig) in learned.tables.iter().zip(&net.cpts) {
            for (row, orow) in t.iter().zip(&orig.table) {
                for (a, b) in row.iter().zip(orow) {
                    assert!((a - b).abs() < 0.05, "learned {a} drifted from prior {b}");
                }
            }
        }
        let exact = jtc_posteriors(&net, &e).unwrap();
        assert!(avg_abs_error(&r.pooled, &exact, &e) < 0.05);
    }

    #[test]
    fn learns_the_chain_posterior() {
        let net = chain_ab();
        let e = Evidence::from_pairs([(1, 1)]);
        let st = AisBnState { update_interval: 1000, ..AisBnState::initial(&net) };
        let cfg = SamplingConfig { samples: 10_000, seed: 6, ..SamplingConfig::default() };
        let (r, learned) = aisbn_run(&net, &e, &cfg, &st).unwrap();
        // After ten updates the root's table should sit near the true
        // posterior P(A=1|B=1) = 0.84, and so should the estimate.
        assert!((learned.tables[0][0][1] - 0.84).abs() < 0.05, "{}", learned.tables[0][0][1]);
        assert!((r.pooled.get(0)[1] - 0.84).abs() < 0.02);
    }

    #[test]
    fn beats_plain_weighting_when_evidence_is_unlikely() {
        // A seven-variable random body plus three observed children whose
        // state is five hundred times likelier when their second parent is
        // 1: the evidence is structurally unlikely (P(e) ≤ 0.25³ whatever
        // the body looks like) and strongly shifts the posterior, so plain
        // likelihood weighting starves while the adaptive sampler can tilt
        // its tables toward the high-weight configurations.
        let mut wins = 0;
        for seed in 0..10u64 {
            let body = random_dag(7, 0.35, 3, seed);
            let mut variables = body.variables.clone();
            let mut cpts = body.cpts.clone();
            let mut e = Evidence::new();
            for (i, &parents) in [(0usize, 3usize), (2, 5), (4, 6)].iter().enumerate() {
                let v = 7 + i;
                variables.push(binary(&format!("E{v}")));
                let table = (0..4)
                    .map(|r| {
                        let p = if r % 2 == 0 { 0.0005 } else { 0.25 };
                        vec![1.0 - p, p]
                    })
                    .collect();
                cpts.push(Cpt { child: v, parents: vec![parents.0, parents.1], table });
                e.bind(v, 1);
            }
            let net = Network::new(variables, cpts).unwrap();
            let exact = jtc_posteriors(&net, &e).unwrap();
            assert!(exact.evidence_probability.unwrap() < 0.02, "evidence not unlikely");
            let cfg =
                SamplingConfig { samples: 10_000, seed: seed + 100, ..SamplingConfig::default() };
            let lw = likelihood_weighting_run(&net, &e, &cfg).unwrap();
            let st = AisBnState { update_interval: 500, ..AisBnState::initial(&net) };
            let (ais, _) = aisbn_run(&net, &e, &cfg, &st).unwrap();
            if mse(&ais.pooled, &exact, &e) <= mse(&lw.pooled, &exact, &e) {
                wins += 1;
            }
        }
        assert!(wins >= 8, "adaptive sampler won only {wins}/10 trials");
    }

    #[test]
    fn learned_tables_stay_normalized_and_positive() {
        // Deterministic parity rows carry exact zeros; the floor must keep
        // every entry positive while rows stay normalized.
        let flip = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
        let net = Network::new(
            vec![binary("U1"), binary("U2"), binary("P"), binary("Y1"), binary("YP")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt {
                    child: 2,
                    parents: vec![0, 1],
                    table: vec![
                        vec![1.0, 0.0],
                        vec![0.0, 1.0],
                        vec![0.0, 1.0],
                        vec![1.0, 0.0],
                    ],
                },
                Cpt { child: 3, parents: vec![0], table: flip.clone() },
                Cpt { child: 4, parents: vec![2], table: flip },
            ],
        )
        .unwrap();
        let check = |tables: &LearnedTables| {
            for t in tables {
                for row in t {
                    assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    assert!(row.iter().all(|&x| x > 0.0));
                }
            }
        };
        let st = AisBnState { update_interval: 500, ..AisBnState::initial(&net) };
        check(&st.tables);
        let e = Evidence::from_pairs([(3, 1), (4, 1)]);
        let cfg = SamplingConfig { samples: 6000, seed: 12, ..SamplingConfig::default() };
        let (r, learned) = aisbn_run(&net, &e, &cfg, &st).unwrap();
        check(&learned.tables);
        // Where plain Gibbs freezes on this network, weighting stays
        // consistent: P(U1=1 | e) = 0.9.
        assert!((r.pooled.get(0)[1] - 0.9).abs() < 0.1);
    }

    #[test]
    fn mismatched_tables_are_rejected() {
        let net = chain_ab();
        let other = random_dag(5, 0.3, 2, 0);
        let cfg = SamplingConfig::default();
        let st = AisBnState::initial(&other);
        assert!(matches!(
            aisbn_run(&net, &Evidence::new(), &cfg, &st),
            Err(SampleError::BadConfig(_))
        ));
    }

    #[test]
    fn runs_are_deterministic_given_seed() {
        let net = random_dag(8, 0.3, 3, 9);
        let e = pick_evidence(&net, EvidencePolicy::Leaves, 2, 4).unwrap();
        let cfg = SamplingConfig { chains: 2, samples: 400, seed: 44, ..SamplingConfig::default() };
        let a = likelihood_weighting_run(&net, &e, &cfg).unwrap();
        let b = likelihood_weighting_run(&net, &e, &cfg).unwrap();
        assert_eq!(a.pooled.tables, b.pooled.tables);
        assert_eq!(a.pooled.evidence_probability, b.pooled.evidence_probability);
        let st = AisBnState { update_interval: 100, ..AisBnState::initial(&net) };
        let (x, sx) = aisbn_run(&net, &e, &cfg, &st).unwrap();
        let (y, sy) = aisbn_run(&net, &e, &cfg, &st).unwrap();
        assert_eq!(x.pooled.tables, y.pooled.tables);
        assert_eq!(sx.tables, sy.tables);
    }
}
