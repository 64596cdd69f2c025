//! Subcommand implementations and the small vocabulary they share.

pub mod benchmark;
pub mod cutset;
pub mod generate;
pub mod infer;
pub mod sample;

use std::time::Instant;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use cutset_core::graph::cutset::{find_loop_cutset, find_nested_w_cutsets, Cutset};
use cutset_core::metrics::{Alpha, ChainStatistics, MetricsReport};
use cutset_core::model::{Evidence, Marginals, Network};
use cutset_core::sampling::cutset::{cutset_gibbs_run, CutsetMode};
use cutset_core::sampling::gibbs::gibbs_run;
use cutset_core::sampling::importance::{aisbn_run, likelihood_weighting_run, AisBnState};
use cutset_core::sampling::{unobserved, EstimatorKind, SamplerResult, SamplingConfig};

use crate::fail::CliError;

/// Sampling algorithm selector shared by `sample` and benchmark suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Gibbs sampling over every unobserved variable.
    Gibbs,
    /// Gibbs sampling over a cutset, exact inference on the rest.
    Cutset,
    /// Likelihood weighting.
    Lw,
    /// Adaptive importance sampling with learned importance tables.
    Aisbn,
}

/// Cutset selection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Loop-cutset: instantiating it leaves a singly connected network.
    Loop,
    /// w-cutset: removing it bounds the conditioned join-tree width by --w.
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Average the exact blanket conditionals seen at each step (lower
    /// variance).
    Mixture,
    /// Count visited states.
    Histogram,
}

impl From<Estimator> for EstimatorKind {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Mixture => EstimatorKind::Mixture,
            Estimator::Histogram => EstimatorKind::Histogram,
        }
    }
}

/// Confidence level for batch-means half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Confidence {
    #[value(name = "90")]
    #[serde(rename = "90")]
    P90,
    #[value(name = "95")]
    #[serde(rename = "95")]
    P95,
    #[value(name = "99")]
    #[serde(rename = "99")]
    P99,
}

impl From<Confidence> for Alpha {
    fn from(c: Confidence) -> Self {
        match c {
            Confidence::P90 => Alpha::P90,
            Confidence::P95 => Alpha::P95,
            Confidence::P99 => Alpha::P99,
        }
    }
}

/// Resolves the cutset every command conditions or samples on. Mode `w`
/// takes the last element of the nested chain C_1 ⊇ … ⊇ C_w rather than a
/// fresh greedy search at w, so cutsets picked at increasing w are subsets
/// of one another and |C_w| never grows with w.
pub(crate) fn select_cutset(
    net: &Network,
    e: &Evidence,
    mode: Mode,
    w: Option<usize>,
) -> Result<Cutset, CliError> {
    match mode {
        Mode::Loop => Ok(find_loop_cutset(net, e)),
        Mode::W => {
            let w = w.ok_or_else(|| CliError::input("--w is required with cutset mode `w`"))?;
            if w == 0 {
                return Err(CliError::input("--w must be at least 1"));
            }
            let chain = find_nested_w_cutsets(net, e, w);
            Ok(chain.into_iter().next_back().expect("chain has one cutset per level"))
        }
    }
}

/// One finished sampling run plus the context the reports need.
pub(crate) struct ExecutedRun {
    pub result: SamplerResult,
    pub cutset: Option<Cutset>,
    /// Variables actually sampled: |C| for cutset sampling, all unobserved
    /// variables otherwise.
    pub sampling_set: usize,
    pub elapsed_seconds: f64,
}

pub(crate) fn execute_sampler(
    net: &Network,
    e: &Evidence,
    method: Method,
    mode: Mode,
    w: Option<usize>,
    cfg: &SamplingConfig,
    ais_interval: usize,
) -> Result<ExecutedRun, CliError> {
    let start = Instant::now();
    let (result, cutset) = match method {
        Method::Gibbs => (gibbs_run(net, e, cfg)?, None),
        Method::Cutset => {
            let c = select_cutset(net, e, mode, w)?;
            let r = cutset_gibbs_run(net, e, &c, cfg, CutsetMode::Incremental)?;
            (r, Some(c))
        }
        Method::Lw => (likelihood_weighting_run(net, e, cfg)?, None),
        Method::Aisbn => {
            let state =
                AisBnState { update_interval: ais_interval, ..AisBnState::initial(net) };
            let (r, _learned) = aisbn_run(net, e, cfg, &state)?;
            (r, None)
        }
    };
    let sampling_set = match &cutset {
        Some(c) => c.len(),
        None => unobserved(net, e).len(),
    };
    Ok(ExecutedRun { result, cutset, sampling_set, elapsed_seconds: start.elapsed().as_secs_f64() })
}

/// `variable,state,probability` rows for every variable, in network order.
pub(crate) fn marginals_csv(net: &Network, m: &Marginals) -> String {
    let mut out = String::from("variable,state,probability\n");
    for (v, var) in net.variables.iter().enumerate() {
        for (s, label) in var.states.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", var.name, label, m.tables[v][s]));
        }
    }
    out
}

/// Per-pair batch-means rows plus a trailing `_aggregate` row.
pub(crate) fn stats_csv(net: &Network, e: &Evidence, st: &ChainStatistics) -> String {
    let mut out = String::from("variable,state,mean,half_width\n");
    for (v, var) in net.variables.iter().enumerate() {
        if e.contains(v) {
            continue;
        }
        for (s, label) in var.states.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                var.name, label, st.pooled[v][s], st.half_width[v][s]
            ));
        }
    }
    out.push_str(&format!("_aggregate,,,{}\n", st.aggregate_half_width));
    out
}

/// `metric,variable,value` rows, metric-major, each metric closed by its
/// `_all` aggregate; the final row counts variables with infinite KL.
pub(crate) fn metrics_csv(net: &Network, report: &MetricsReport) -> String {
    let mut out = String::from("metric,variable,value\n");
    let columns: [(&str, fn(&cutset_core::metrics::VariableMetrics) -> f64, f64); 4] = [
        ("mse", |m| m.mse, report.mse),
        ("avg_abs_error", |m| m.avg_abs_error, report.avg_abs_error),
        ("kl", |m| m.kl, report.kl),
        ("hellinger", |m| m.hellinger, report.hellinger),
    ];
    for (name, pick, aggregate) in columns {
        for (v, per_var) in report.per_variable.iter().enumerate() {
            if let Some(m) = per_var {
                out.push_str(&format!("{},{},{}\n", name, net.variables[v].name, pick(m)));
            }
        }
        out.push_str(&format!("{name},_all,{aggregate}\n"));
    }
    out.push_str(&format!("kl_infinite,_all,{}\n", report.kl_infinite));
    out
}
