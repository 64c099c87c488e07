//! newsflow-core: turn time-stamped semantic triple streams into daily
//! directed multigraphs, count append/extend/mutate changes against a set of
//! initial triples, and fit the resulting multivariate count series with a
//! discrete-time Hawkes process.
//!
//! Modules mirror the pipeline stages:
//!
//! - [`corpus`]: ingest line-delimited triple records, bucket by day.
//! - [`dedup`]: coarse/fine phrase similarity and canonicalization.
//! - [`graph`]: daily RDF graphs, cumulative graph, change classification,
//!   induced count series.
//! - [`hawkes`]: conditional intensity, likelihood, MLE fitting, simulation.
//! - [`analysis`]: normalization, average intensity curves, distance-based
//!   group classification, k-means clustering of seed series.

pub mod analysis;
pub mod corpus;
pub mod dedup;
pub mod graph;
pub mod hawkes;
