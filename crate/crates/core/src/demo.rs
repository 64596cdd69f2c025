//! A small seven-variable loopy network used in docs, examples, and tests.
//!
//! Structure (all variables binary):
//!
//! ```text
//!   A ──► C ──► F ──► G
//!               ▲ ╲
//!   D ──► B ────┘  ╲
//!   │               ▼
//!   └─────────────► E
//! ```
//!
//! Arcs: A→C, D→B, B→F, C→F, D→E, F→E, F→G. The moral graph contains a
//! single loop through B, D, E, F, so conditioning on D (a source of that
//! loop) breaks it: {A, D} is a valid loop-cutset and {B, D} is a valid
//! 1-cutset. Conditioned on {B, D, E} the join tree has clusters
//! {A,C} — {B,C,F} — {B,D,E,F,G} with residual width 1.

use crate::model::{Cpt, Network, Variable};

/// Variable indices in [`demo_network`]: A=0, B=1, C=2, D=3, E=4, F=5, G=6.
pub const A: usize = 0;
pub const B: usize = 1;
pub const C: usize = 2;
pub const D: usize = 3;
pub const E: usize = 4;
pub const F: usize = 5;
pub const G: usize = 6;

/// Builds the demo network. All CPT entries are fixed positive values, so
/// every conditional query on it is well defined.
pub fn demo_network() -> Network {
    let var = |name: &str| Variable { name: name.into(), states: vec!["0".into(), "1".into()] };
    let variables = vec![var("A"), var("B"), var("C"), var("D"), var("E"), var("F"), var("G")];
    let cpts = vec![
        Cpt { child: A, parents: vec![], table: vec![vec![0.6, 0.4]] },
        Cpt { child: B, parents: vec![D], table: vec![vec![0.7, 0.3], vec![0.2, 0.8]] },
        Cpt { child: C, parents: vec![A], table: vec![vec![0.8, 0.2], vec![0.3, 0.7]] },
        Cpt { child: D, parents: vec![], table: vec![vec![0.5, 0.5]] },
        Cpt {
            child: E,
            parents: vec![D, F],
            table: vec![vec![0.9, 0.1], vec![0.4, 0.6], vec![0.5, 0.5], vec![0.1, 0.9]],
        },
        Cpt {
            child: F,
            parents: vec![B, C],
            table: vec![vec![0.85, 0.15], vec![0.45, 0.55], vec![0.35, 0.65], vec![0.05, 0.95]],
        },
        Cpt { child: G, parents: vec![F], table: vec![vec![0.75, 0.25], vec![0.25, 0.75]] },
    ];
    Network::new(variables, cpts).unwrap()
}
