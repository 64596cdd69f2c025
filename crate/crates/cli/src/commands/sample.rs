//! `cutset sample`: Monte Carlo posterior estimation with deterministic CSV
//! outputs.
//!
//! Writes `estimates.csv` (pooled estimates), `stats.csv` (batch-means
//! half-widths when at least two chains ran), `metrics.csv` (error against
//! --exact-ref, when given), and `manifest.json`. Everything except the
//! manifest's timing section is a pure function of the inputs and --seed.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use cutset_core::metrics::{batch_means_ci, MetricsReport};
use cutset_core::sampling::{InitMode, SamplingConfig, ScanOrder};

use crate::commands::{
    execute_sampler, marginals_csv, metrics_csv, stats_csv, Confidence, Estimator, Method, Mode,
};
use crate::fail::CliError;
use crate::load::{parse_marginals_csv, read_file};
use crate::manifest::{write_text, RunManifest, Timing};

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Network JSON file.
    #[arg(long)]
    pub net: PathBuf,
    /// Evidence JSON file.
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Cutset selection for --method cutset.
    #[arg(long, value_enum, default_value_t = Mode::Loop)]
    pub cutset_mode: Mode,
    /// Width bound for --cutset-mode w.
    #[arg(long)]
    pub w: Option<usize>,
    /// Independently restarted chains M.
    #[arg(long, default_value_t = 10)]
    pub chains: usize,
    /// Samples per chain T, after burn-in.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Discarded initial samples per chain.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Master seed; chain c draws from stream c of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Estimator::Mixture)]
    pub estimator: Estimator,
    /// Confidence level for the batch-means half-widths.
    #[arg(long, value_enum, default_value_t = Confidence::P90)]
    pub confidence: Confidence,
    /// Samples between importance-table updates (--method aisbn).
    #[arg(long, default_value_t = 2500)]
    pub ais_interval: usize,
    /// Exact marginals CSV (as written by `infer`) to score against.
    #[arg(long)]
    pub exact_ref: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(a: &SampleArgs) -> Result<(), CliError> {
    let parameters = json!({
        "net": a.net.display().to_string(),
        "evidence": a.evidence.as_ref().map(|p| p.display().to_string()),
        "method": a.method,
        "cutset_mode": a.cutset_mode,
        "w": a.w,
        "chains": a.chains,
        "samples": a.samples,
        "burn_in": a.burn_in,
        "seed": a.seed,
        "scan": "systematic",
        "init": "ibp",
        "estimator": a.estimator,
        "confidence": a.confidence,
        "ais_interval": a.ais_interval,
        "exact_ref": a.exact_ref.as_ref().map(|p| p.display().to_string()),
        "out": a.out.display().to_string(),
    });
    let mut man = RunManifest::new("sample", parameters);
    let net = crate::load::load_network(&a.net, &mut man)?;
    let e = crate::load::load_evidence(&net, a.evidence.as_deref(), &mut man)?;

    let cfg = SamplingConfig {
        chains: a.chains,
        samples: a.samples,
        burn_in: a.burn_in,
        scan: ScanOrder::Systematic,
        seed: a.seed,
        init: InitMode::Ibp,
        estimator: a.estimator.into(),
        residual_every: 1,
    };
    let run = execute_sampler(&net, &e, a.method, a.cutset_mode, a.w, &cfg, a.ais_interval)?;
    let result = &run.result;

    let mut results = serde_json::Map::new();
    results.insert("sampling_set_size".into(), json!(run.sampling_set));
    results.insert("dead_ends".into(), json!(result.dead_ends));
    results.insert("unique_tuples".into(), json!(result.unique_tuples));
    if let Some(c) = &run.cutset {
        results.insert("certified_width".into(), json!(c.certified_width));
        results.insert(
            "cutset_members".into(),
            json!(c.members.iter().map(|&v| net.variables[v].name.clone()).collect::<Vec<_>>()),
        );
        eprintln!("cutset: {} member(s), certified width {}", c.len(), c.certified_width);
    }
    if let Some(m) = result.messages_per_sample {
        results.insert("messages_per_sample".into(), json!(m));
    }
    if let Some(p) = result.pooled.evidence_probability {
        results.insert("evidence_probability".into(), json!(p));
        eprintln!("P(evidence) ≈ {p}");
    }
    if let Some(u) = result.unique_tuples {
        eprintln!("unique sampled tuples: {u}");
    }

    let estimates = marginals_csv(&net, &result.pooled);
    write_text(&a.out.join("estimates.csv"), &estimates)?;

    if a.chains >= 2 {
        let st = batch_means_ci(&result.per_chain, &e, a.confidence.into())?;
        results.insert("aggregate_half_width".into(), json!(st.aggregate_half_width));
        eprintln!("aggregate half-width: {}", st.aggregate_half_width);
        write_text(&a.out.join("stats.csv"), &stats_csv(&net, &e, &st))?;
    } else {
        eprintln!("confidence intervals need at least two chains; stats.csv not written");
    }

    if let Some(ref_path) = &a.exact_ref {
        let text = read_file(ref_path)?;
        man.record_input(ref_path, text.as_bytes());
        let exact = parse_marginals_csv(&net, &text, ref_path)?;
        let report = MetricsReport::compute(&exact, &result.pooled, &e)?;
        results.insert("mse".into(), json!(report.mse));
        results.insert("avg_abs_error".into(), json!(report.avg_abs_error));
        eprintln!(
            "vs {}: mse {} | avg abs error {} | hellinger {}",
            ref_path.display(),
            report.mse,
            report.avg_abs_error,
            report.hellinger
        );
        write_text(&a.out.join("metrics.csv"), &metrics_csv(&net, &report))?;
    }

    man.results = serde_json::Value::Object(results);
    man.timing = Some(Timing {
        elapsed_seconds: run.elapsed_seconds,
        samples_per_second: Some(result.rate),
    });
    man.write(&a.out)?;

    print!("{estimates}");
    eprintln!("rate: {:.0} samples/s", result.rate);
    Ok(())
}
