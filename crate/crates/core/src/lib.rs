//! Discrete Bayesian network inference built around cutset sampling.
//!
//! The crate provides, roughly bottom-up:
//!
//! - [`model`]: networks, CPTs, evidence, a brute-force enumeration oracle,
//!   and the JSON file formats;
//! - [`graph`]: moral graphs, elimination orderings, induced width, join
//!   trees conditioned on a variable subset, and cutset selection
//!   (loop-cutsets and w-cutsets);
//! - [`exact`]: join-tree clustering with lazy message passing, reusable
//!   across the assignments visited by a sampler, plus full cutset
//!   conditioning by enumeration;
//! - [`propagation`]: iterative belief propagation (also used to seed
//!   sampler chains);
//! - [`sampling`]: Gibbs sampling over all variables, cutset sampling
//!   (Gibbs over a cutset with exact inference on the rest), likelihood
//!   weighting, and adaptive importance sampling;
//! - [`metrics`]: error measures against exact marginals and batch-means
//!   confidence intervals over independent chains;
//! - [`generators`]: reproducible benchmark network families;
//! - [`demo`]: the small worked network used throughout the docs and tests.
//!
//! # Network file format
//!
//! Networks are stored as JSON:
//!
//! ```json
//! {
//!   "variables": [{"name": "A", "states": ["0", "1"]}, ...],
//!   "cpts": [{"child": "B", "parents": ["A"], "table": [[0.8, 0.2], [0.3, 0.7]]}, ...]
//! }
//! ```
//!
//! Every variable carries exactly one CPT. Table rows enumerate parent
//! configurations with the first listed parent most significant; entries in
//! a row follow the child's state order. Evidence files look like
//! `{"evidence": {"A": "1"}}` with state *labels*, not indices.

pub mod demo;
pub mod error;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod propagation;
pub mod sampling;
