//! Mining co-authorship association rules and decomposing the resulting
//! yearly graphs into molecular structures.
//!
//! The stages, in pipeline order:
//!
//! * [`ingest`] reads publications (JSONL, CSV, DBLP-style XML) and buckets
//!   them by year.
//! * [`rules`] mines pairwise rules `A => B` under support, confidence and
//!   lift thresholds.
//! * [`graph`] holds the per-year directed graph and the bond/role
//!   predicates.
//! * [`decompose`] finds stars, bridges, diamonds and communities and
//!   computes the `(SB, BR, DI, NU, RE, TR)` attribute vector.
//! * [`cluster`] builds a dendrogram over attribute vectors.
//! * [`temporal`] tracks patterns across years and classifies lifecycles.
//! * [`export`], [`corpus`] and [`pipeline`] handle artifacts, synthetic
//!   corpora and orchestration.

pub mod cluster;
pub mod corpus;
pub mod decompose;
pub mod export;
pub mod format;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod rules;
pub mod temporal;

pub use cluster::{hcluster, ClusterOptions, Dendrogram, Linkage};
pub use decompose::{AttributeVector, Community, MotifClass, Role};
pub use graph::AssocGraph;
pub use ingest::{Publication, YearBuckets};
pub use pipeline::{run_pipeline, PipelineConfig, RunManifest};
pub use rules::{mine_rules, Rule, Thresholds};
pub use temporal::{IdentityMode, Lifecycle, PatternTimeline};
