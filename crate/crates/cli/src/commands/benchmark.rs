//! `cutset benchmark`: run a suite of sampling configurations against exact
//! answers and tabulate accuracy per (network, method, w) cell.
//!
//! The suite file is a JSON array of descriptors mirroring `sample` flags.
//! Rows keep suite order. `results.csv` is deterministic under fixed seeds;
//! wall-clock rates go to `timing.csv`, which is expected to vary.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use cutset_core::exact::jtc_posteriors;
use cutset_core::metrics::{batch_means_ci, Alpha, MetricsReport};
use cutset_core::model::{Evidence, Marginals};
use cutset_core::sampling::{InitMode, SamplingConfig, ScanOrder};

use crate::commands::{execute_sampler, Estimator, Method, Mode};
use crate::fail::CliError;
use crate::load::{load_evidence, load_network};
use crate::manifest::{write_text, RunManifest};

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Suite file: a JSON array of sampling-run descriptors. Relative paths
    /// inside it resolve against the suite file's directory.
    #[arg(long)]
    pub suite: PathBuf,
    /// Output directory for results.csv, timing.csv, and manifest.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn default_mode() -> Mode {
    Mode::Loop
}
fn default_chains() -> usize {
    10
}
fn default_samples() -> usize {
    1000
}
fn default_estimator() -> Estimator {
    Estimator::Mixture
}
fn default_ais_interval() -> usize {
    2500
}

/// One suite cell; field meanings match the `sample` flags of the same name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteRun {
    #[serde(default)]
    pub name: Option<String>,
    pub net: String,
    #[serde(default)]
    pub evidence: Option<String>,
    pub method: Method,
    #[serde(default = "default_mode")]
    pub cutset_mode: Mode,
    #[serde(default)]
    pub w: Option<usize>,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default = "default_ais_interval")]
    pub ais_interval: usize,
}

const RESULTS_HEADER: &str =
    "name,network,method,mode,w,sampling_set,certified_width,mse,avg_abs_error,kl,hellinger,delta_90,flag\n";

fn method_str(m: Method) -> &'static str {
    match m {
        Method::Gibbs => "gibbs",
        Method::Cutset => "cutset",
        Method::Lw => "lw",
        Method::Aisbn => "aisbn",
    }
}

/// Frozen-chain diagnosis: every chain's estimate is a point mass on every
/// unobserved variable (the walk never left its starting assignment), while
/// the exact posterior keeps interior mass somewhere — a stuck chain cannot
/// represent that no matter how long it runs, so the walk is not mixing.
fn chains_frozen(per_chain: &[Marginals], exact: &Marginals, e: &Evidence) -> bool {
    let degenerate = per_chain.iter().all(|m| {
        m.tables.iter().enumerate().all(|(v, row)| {
            e.contains(v) || row.iter().all(|&p| p < 1e-9 || p > 1.0 - 1e-9)
        })
    });
    degenerate
        && exact.tables.iter().enumerate().any(|(v, row)| {
            !e.contains(v) && row.iter().any(|&p| p > 1e-3 && p < 1.0 - 1e-3)
        })
}

fn resolve(base: &Path, given: &str) -> PathBuf {
    let p = Path::new(given);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn run(a: &BenchmarkArgs) -> Result<(), CliError> {
    let suite_text = crate::load::read_file(&a.suite)?;
    let runs: Vec<SuiteRun> = serde_json::from_str(&suite_text)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.suite.display())))?;
    let parameters = json!({
        "suite": a.suite.display().to_string(),
        "out": a.out.display().to_string(),
        "runs": runs,
    });
    let mut man = RunManifest::new("benchmark", parameters);
    man.record_input(&a.suite, suite_text.as_bytes());

    let base = a.suite.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut results = String::from(RESULTS_HEADER);
    let mut timing = String::from("name,samples_per_second,elapsed_seconds\n");

    for (i, spec) in runs.iter().enumerate() {
        let name = spec.name.clone().unwrap_or_else(|| format!("run{:02}", i + 1));
        let net_path = resolve(&base, &spec.net);
        let net = load_network(&net_path, &mut man)?;
        let ev_path = spec.evidence.as_ref().map(|p| resolve(&base, p));
        let e = load_evidence(&net, ev_path.as_deref(), &mut man)?;
        let exact = jtc_posteriors(&net, &e)?;

        let cfg = SamplingConfig {
            chains: spec.chains,
            samples: spec.samples,
            burn_in: spec.burn_in,
            scan: ScanOrder::Systematic,
            seed: spec.seed,
            init: InitMode::Ibp,
            estimator: spec.estimator.into(),
            residual_every: 1,
        };
        let run =
            execute_sampler(&net, &e, spec.method, spec.cutset_mode, spec.w, &cfg, spec.ais_interval)?;
        let report = MetricsReport::compute(&exact, &run.result.pooled, &e)?;
        let delta = if spec.chains >= 2 {
            Some(batch_means_ci(&run.result.per_chain, &e, Alpha::P90)?.aggregate_half_width)
        } else {
            None
        };
        let mcmc = matches!(spec.method, Method::Gibbs | Method::Cutset);
        let flag = if mcmc && chains_frozen(&run.result.per_chain, &exact, &e) {
            "non-ergodic"
        } else {
            ""
        };

        let (mode, w) = match (spec.method, spec.cutset_mode) {
            (Method::Cutset, Mode::Loop) => ("loop".to_string(), String::new()),
            (Method::Cutset, Mode::W) => ("w".to_string(), spec.w.unwrap_or(0).to_string()),
            _ => (String::new(), String::new()),
        };
        let certified =
            run.cutset.as_ref().map(|c| c.certified_width.to_string()).unwrap_or_default();
        results.push_str(&format!(
            "{name},{net},{method},{mode},{w},{set},{certified},{mse},{avg},{kl},{hel},{delta},{flag}\n",
            net = spec.net,
            method = method_str(spec.method),
            set = run.sampling_set,
            mse = report.mse,
            avg = report.avg_abs_error,
            kl = report.kl,
            hel = report.hellinger,
            delta = delta.map(|d| d.to_string()).unwrap_or_default(),
        ));
        timing.push_str(&format!(
            "{name},{:.1},{:.4}\n",
            run.result.rate, run.elapsed_seconds
        ));
        eprintln!(
            "[{}/{}] {name}: avg abs error {}, Δ_0.90 {}{}",
            i + 1,
            runs.len(),
            report.avg_abs_error,
            delta.map(|d| d.to_string()).unwrap_or_else(|| "n/a".into()),
            if flag.is_empty() { String::new() } else { format!(" [{flag}]") },
        );
    }

    man.results = json!({ "rows": runs.len() });
    write_text(&a.out.join("results.csv"), &results)?;
    write_text(&a.out.join("timing.csv"), &timing)?;
    man.write(&a.out)?;
    print!("{results}");
    Ok(())
}
