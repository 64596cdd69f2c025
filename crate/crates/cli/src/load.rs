//! Input loading: network/evidence JSON files and marginals CSV files, with
//! digests recorded into the run manifest as a side effect.

use std::path::Path;

use cutset_core::model::{parse_network, Evidence, Marginals, Network};

use crate::fail::CliError;
use crate::manifest::RunManifest;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn load_network(path: &Path, man: &mut RunManifest) -> Result<Network, CliError> {
    let text = read_file(path)?;
    man.record_input(path, text.as_bytes());
    let net = parse_network(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    // Names go into unquoted CSV cells; refuse anything that would corrupt
    // the output rather than emitting a file no parser agrees on.
    for var in &net.variables {
        for token in std::iter::once(&var.name).chain(var.states.iter()) {
            if token.contains([',', '"', '\n']) {
                return Err(CliError::Input(format!(
                    "{}: name `{token}` contains a comma, quote, or newline, which the CSV reports cannot represent",
                    path.display()
                )));
            }
        }
    }
    Ok(net)
}

pub fn load_evidence(
    net: &Network,
    path: Option<&Path>,
    man: &mut RunManifest,
) -> Result<Evidence, CliError> {
    let Some(path) = path else { return Ok(Evidence::new()) };
    let text = read_file(path)?;
    man.record_input(path, text.as_bytes());
    Evidence::parse(net, &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses a `variable,state,probability` CSV (as written by `infer` and
/// `sample`) back into marginals aligned with `net`. Every variable-state
/// pair must appear exactly once.
pub fn parse_marginals_csv(net: &Network, text: &str, origin: &Path) -> Result<Marginals, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", origin.display()));
    let mut lines = text.lines();
    match lines.next() {
        Some("variable,state,probability") => {}
        _ => return Err(bad("expected header `variable,state,probability`".into())),
    }
    let mut tables: Vec<Vec<Option<f64>>> =
        (0..net.num_variables()).map(|v| vec![None; net.cardinality(v)]).collect();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cells = line.splitn(3, ',');
        let (name, label, value) = match (cells.next(), cells.next(), cells.next()) {
            (Some(n), Some(l), Some(v)) => (n, l, v),
            _ => return Err(bad(format!("line {}: expected 3 cells", lineno + 2))),
        };
        let v = net
            .variable_index(name)
            .ok_or_else(|| bad(format!("line {}: unknown variable `{name}`", lineno + 2)))?;
        let s = net.variables[v]
            .states
            .iter()
            .position(|st| st == label)
            .ok_or_else(|| bad(format!("line {}: unknown state `{label}` of `{name}`", lineno + 2)))?;
        let p: f64 = value
            .parse()
            .map_err(|_| bad(format!("line {}: `{value}` is not a number", lineno + 2)))?;
        if tables[v][s].replace(p).is_some() {
            return Err(bad(format!("line {}: duplicate entry for {name},{label}", lineno + 2)));
        }
    }
    let tables = tables
        .into_iter()
        .enumerate()
        .map(|(v, row)| {
            row.into_iter()
                .enumerate()
                .map(|(s, cell)| {
                    cell.ok_or_else(|| {
                        bad(format!(
                            "missing entry for {},{}",
                            net.variables[v].name, net.variables[v].states[s]
                        ))
                    })
                })
                .collect::<Result<Vec<f64>, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Marginals { tables, evidence_probability: None })
}
