//! `cutset cutset`: find a loop- or w-cutset, certify the width left behind,
//! and report cluster sizes of the conditioned join tree.
//!
//! The report is a four-column CSV (`record,level,key,value`). `level` is
//! the w bound a row belongs to and stays empty outside --nested mode;
//! `key` carries a member index or a cluster size, depending on `record`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use cutset_core::graph::cutset::{find_nested_w_cutsets, Cutset};
use cutset_core::graph::jointree::build_join_tree;
use cutset_core::model::{Evidence, Network};

use crate::commands::{select_cutset, Mode};
use crate::fail::CliError;
use crate::manifest::{write_text, RunManifest};

#[derive(Debug, Args)]
pub struct CutsetArgs {
    /// Network JSON file.
    #[arg(long)]
    pub net: PathBuf,
    /// Evidence JSON file; observed variables never enter the cutset.
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    /// loop: leave a singly connected network; w: bound the conditioned
    /// join-tree width by --w.
    #[arg(long, value_enum, default_value = "loop")]
    pub mode: Mode,
    /// Width bound for --mode w.
    #[arg(long, required_if_eq("mode", "w"))]
    pub w: Option<usize>,
    /// Report the whole chain C_1 ⊇ C_2 ⊇ … up to --w (requires --mode w).
    #[arg(long, requires = "w")]
    pub nested: bool,
    /// Optional directory for cutset.csv and manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Sizes of the clusters (residual and conditioned slots together) of the
/// join tree built with `members` and the evidence conditioned out.
fn cluster_sizes(net: &Network, e: &Evidence, cutset: &Cutset) -> BTreeMap<usize, usize> {
    let mut conditioned = cutset.members.clone();
    conditioned.extend(e.variables());
    let tree = build_join_tree(net, &conditioned);
    let mut histogram = BTreeMap::new();
    for cluster in &tree.clusters {
        *histogram.entry(cluster.len()).or_insert(0usize) += 1;
    }
    histogram
}

fn push_level_rows(
    out: &mut String,
    net: &Network,
    e: &Evidence,
    cutset: &Cutset,
    level: &str,
) {
    for (i, &v) in cutset.members.iter().enumerate() {
        out.push_str(&format!("member,{level},{i},{}\n", net.variables[v].name));
    }
    out.push_str(&format!("size,{level},,{}\n", cutset.len()));
    out.push_str(&format!("certified_width,{level},,{}\n", cutset.certified_width));
    let histogram = cluster_sizes(net, e, cutset);
    let clusters: usize = histogram.values().sum();
    out.push_str(&format!("cluster_count,{level},,{clusters}\n"));
    for (size, count) in histogram {
        out.push_str(&format!("cluster_size,{level},{size},{count}\n"));
    }
}

pub fn run(a: &CutsetArgs) -> Result<(), CliError> {
    if a.nested && a.mode != Mode::W {
        return Err(CliError::input("--nested requires --mode w"));
    }
    let parameters = json!({
        "net": a.net.display().to_string(),
        "evidence": a.evidence.as_ref().map(|p| p.display().to_string()),
        "mode": a.mode,
        "w": a.w,
        "nested": a.nested,
        "out": a.out.as_ref().map(|p| p.display().to_string()),
    });
    let mut man = RunManifest::new("cutset", parameters);
    let net = crate::load::load_network(&a.net, &mut man)?;
    let e = crate::load::load_evidence(&net, a.evidence.as_deref(), &mut man)?;

    let mut csv = String::from("record,level,key,value\n");
    match a.mode {
        Mode::Loop => csv.push_str("mode,,,loop\n"),
        Mode::W => {
            csv.push_str("mode,,,w\n");
            csv.push_str(&format!("w,,,{}\n", a.w.unwrap()));
        }
    }

    if a.nested {
        let w_max = a.w.unwrap();
        if w_max == 0 {
            return Err(CliError::input("--w must be at least 1"));
        }
        csv.push_str("nested,,,true\n");
        let chain = find_nested_w_cutsets(&net, &e, w_max);
        let mut levels = Vec::new();
        for (i, cutset) in chain.iter().enumerate() {
            let w = i + 1;
            push_level_rows(&mut csv, &net, &e, cutset, &w.to_string());
            if i > 0 {
                let prev = &chain[i - 1].members;
                let relation = if !cutset.members.is_subset(prev) {
                    "violation"
                } else if cutset.members.len() < prev.len() {
                    "strict"
                } else {
                    "equal"
                };
                csv.push_str(&format!("subset,{w},,{relation}\n"));
            }
            levels.push(json!({
                "w": w,
                "size": cutset.len(),
                "certified_width": cutset.certified_width,
                "members": cutset.members.iter().map(|&v| net.variables[v].name.clone()).collect::<Vec<_>>(),
            }));
            eprintln!(
                "w={w}: {} member(s), certified width {}",
                cutset.len(),
                cutset.certified_width
            );
        }
        man.results = json!({ "levels": levels });
    } else {
        let cutset = select_cutset(&net, &e, a.mode, a.w)?;
        push_level_rows(&mut csv, &net, &e, &cutset, "");
        man.results = json!({
            "members": cutset.members.iter().map(|&v| net.variables[v].name.clone()).collect::<Vec<_>>(),
            "size": cutset.len(),
            "certified_width": cutset.certified_width,
        });
        eprintln!(
            "{}: {} member(s), certified width {}",
            match a.mode {
                Mode::Loop => "loop-cutset".to_string(),
                Mode::W => format!("{}-cutset", a.w.unwrap()),
            },
            cutset.len(),
            cutset.certified_width
        );
    }

    print!("{csv}");
    if let Some(dir) = &a.out {
        write_text(&dir.join("cutset.csv"), &csv)?;
        man.write(dir)?;
    }
    Ok(())
}
