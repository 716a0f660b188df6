//! Learned query latency prediction across degrees of parallelism (DOP).
//!
//! The pipeline: parse plan trees ([`plan`]), encode them as fixed-dimension
//! vectors over composite-key channels ([`features`]), train a regressor of
//! latency on `(features, DOP)` ([`models`]), then pick per-query or
//! per-workload DOPs ([`selection`]) and score predictions ([`metrics`]).
//! [`harness`] runs whole cross-validated experiments, [`synth`] produces
//! synthetic workloads with known latency curves, and [`cli`] exposes it all
//! as the `doptune` command.

pub mod cli;
pub mod features;
pub mod folds;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod plan;
pub mod selection;
pub mod synth;
pub mod workload;
