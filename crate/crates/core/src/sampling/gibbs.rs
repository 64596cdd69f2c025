//! Plain Gibbs sampling over all unobserved variables.

use rand::Rng;
use rayon::prelude::*;

use crate::error::SampleError;
use crate::generators::sample_index;
use crate::model::{Evidence, Marginals, Network};
use crate::sampling::{
    initialize_chain, markov_blanket_distribution, pool_chains, unobserved,
    EstimatorAccumulator, EstimatorKind, SamplerResult, SamplingConfig, ScanOrder, INIT_ATTEMPTS,
};

/// Runs M independent Gibbs chains and pools their estimates.
///
/// One sample is one scan: every sampled variable is updated once
/// (systematic order or by uniformly random picks, one pick per variable
/// per scan). The mixture estimator averages each variable's full
/// conditional given the completed sample; the histogram estimator counts
/// the sample's values. A zero-mass conditional (possible only with
/// deterministic tables) keeps the current value and bumps `dead_ends`.
pub fn gibbs_run(
    net: &Network,
    e: &Evidence,
    cfg: &SamplingConfig,
) -> Result<SamplerResult, SampleError> {
    cfg.validate()?;
    let sampled = unobserved(net, e);
    let start = std::time::Instant::now();
    let chains: Vec<(Marginals, u64)> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| run_chain(net, e, cfg, &sampled, chain))
        .collect::<Result<_, _>>()?;
    let elapsed = start.elapsed().as_secs_f64();
    let per_chain: Vec<Marginals> = chains.iter().map(|(m, _)| m.clone()).collect();
    let dead_ends = chains.iter().map(|(_, d)| d).sum();
    Ok(SamplerResult {
        pooled: pool_chains(&per_chain),
        per_chain,
        rate: (cfg.chains * cfg.samples) as f64 / elapsed.max(1e-12),
        unique_tuples: None,
        dead_ends,
        messages_per_sample: None,
    })
}

fn run_chain(
    net: &Network,
    e: &Evidence,
    cfg: &SamplingConfig,
    sampled: &[usize],
    chain: usize,
) -> Result<(Marginals, u64), SampleError> {
    let mut rng = cfg.chain_rng(chain);
    let mut x = 'init: {
        for _ in 0..INIT_ATTEMPTS {
            let a = initialize_chain(net, e, sampled, cfg.init, &mut rng);
            if net.joint_probability(&a) > 0.0 {
                break 'init a;
            }
        }
        return Err(SampleError::InitFailed(INIT_ATTEMPTS));
    };

    let mut acc = EstimatorAccumulator::new(net);
    let mut dead_ends = 0u64;
    for t in 0..cfg.burn_in + cfg.samples {
        for step in 0..sampled.len() {
            let v = match cfg.scan {
                ScanOrder::Systematic => sampled[step],
                ScanOrder::Random => sampled[rng.random_range(0..sampled.len())],
            };
            match markov_blanket_distribution(net, v, &x) {
                Some(dist) => x.set(v, sample_index(&dist, rng.random())),
                None => dead_ends += 1,
            }
        }
        if t < cfg.burn_in {
            continue;
        }
        match cfg.estimator {
            EstimatorKind::Mixture => {
                for &v in sampled {
                    if let Some(dist) = markov_blanket_distribution(net, v, &x) {
                        acc.add_distribution(v, &dist);
                    }
                }
            }
            EstimatorKind::Histogram => {
                for &v in sampled {
                    acc.add_count(v, x.get(v).unwrap());
                }
            }
        }
    }
    Ok((acc.into_marginals(net, e), dead_ends))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::jtc_posteriors;
    use crate::generators::random_dag;
    use crate::model::{Cpt, Variable};
    use crate::sampling::InitMode;

    fn binary(n: &str) -> Variable {
        Variable { name: n.into(), states: vec!["0".into(), "1".into()] }
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

    #[test]
    fn single_sampled_variable_estimate_is_exact() {
        // With one unobserved variable the full conditional *is* the
        // posterior, so the mixture estimate matches it for any T.
        let net = Network::new(
            vec![binary("A"), binary("B")],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.4, 0.6]] },
                Cpt { child: 1, parents: vec![0], table: vec![vec![0.8, 0.2], vec![0.3, 0.7]] },
            ],
        )
        .unwrap();
        let e = Evidence::from_pairs([(1, 1)]);
        let cfg = SamplingConfig { samples: 10, seed: 5, ..SamplingConfig::default() };
        let r = gibbs_run(&net, &e, &cfg).unwrap();
        // P(A=1 | B=1) = 0.42 / 0.50 = 0.84.
        assert!((r.pooled.get(0)[1] - 0.84).abs() < 1e-12);
        assert_eq!(r.dead_ends, 0);
    }

    #[test]
    fn positive_network_estimates_converge() {
        let net = random_dag(10, 0.3, 3, 42);
        let e = Evidence::from_pairs([(9, 0)]);
        let exact = jtc_posteriors(&net, &e).unwrap();
        let cfg = SamplingConfig {
            chains: 10,
            samples: 1500,
            seed: 7,
            ..SamplingConfig::default()
        };
        let r = gibbs_run(&net, &e, &cfg).unwrap();
        let err = avg_abs_error(&r.pooled, &exact, &e);
        assert!(err < 0.01, "average absolute error {err}");
    }

    #[test]
    fn random_scan_also_converges() {
        let net = random_dag(8, 0.3, 3, 11);
        let e = Evidence::new();
        let exact = jtc_posteriors(&net, &e).unwrap();
        let cfg = SamplingConfig {
            chains: 4,
            samples: 3000,
            scan: ScanOrder::Random,
            seed: 3,
            ..SamplingConfig::default()
        };
        let r = gibbs_run(&net, &e, &cfg).unwrap();
        let err = avg_abs_error(&r.pooled, &exact, &e);
        assert!(err < 0.02, "average absolute error {err}");
    }

    #[test]
    fn deterministic_parity_freezes_and_is_flagged() {
        // P = U1 xor U2 (deterministic), noisy observations of U1 and P.
        // The posterior is P(U1=1) = 0.9, but every Gibbs conditional for
        // U1, U2, P is degenerate, so chains freeze at their initial state
        // and the pooled estimate stays near the 0.5 of uniform draws.
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
        let e = Evidence::from_pairs([(3, 1), (4, 1)]);
        let exact = jtc_posteriors(&net, &e).unwrap();
        assert!((exact.get(0)[1] - 0.9).abs() < 1e-12);
        let cfg = SamplingConfig {
            chains: 50,
            samples: 20,
            init: InitMode::UniformRandom,
            seed: 13,
            ..SamplingConfig::default()
        };
        let r = gibbs_run(&net, &e, &cfg).unwrap();
        // Every conditional is degenerate (exactly one consistent value),
        // never all-zero, so chains freeze without tripping the dead-end
        // counter: each per-chain estimate is its initial state.
        assert_eq!(r.dead_ends, 0);
        for chain in &r.per_chain {
            let p = chain.get(0)[1];
            assert!(p < 1e-12 || (p - 1.0).abs() < 1e-12, "chain moved: {p}");
        }
        let bias = (r.pooled.get(0)[1] - 0.9).abs();
        assert!(bias > 0.15, "expected a frozen, biased estimate; bias {bias}");
    }

    #[test]
    fn runs_are_deterministic_given_seed() {
        let net = random_dag(8, 0.3, 3, 2);
        let e = Evidence::from_pairs([(7, 0)]);
        let cfg = SamplingConfig { chains: 3, samples: 50, seed: 99, ..SamplingConfig::default() };
        let a = gibbs_run(&net, &e, &cfg).unwrap();
        let b = gibbs_run(&net, &e, &cfg).unwrap();
        assert_eq!(a.pooled.tables, b.pooled.tables);
        for (x, y) in a.per_chain.iter().zip(&b.per_chain) {
            assert_eq!(x.tables, y.tables);
        }
    }

    #[test]
    fn histogram_counts_sum_to_sample_count() {
        let net = random_dag(6, 0.3, 3, 8);
        let e = Evidence::new();
        let cfg = SamplingConfig {
            samples: 200,
            estimator: EstimatorKind::Histogram,
            seed: 4,
            ..SamplingConfig::default()
        };
        let r = gibbs_run(&net, &e, &cfg).unwrap();
        for v in 0..6 {
            let s: f64 = r.per_chain[0].get(v).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
