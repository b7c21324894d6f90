//! Expected Reach: a spreading-power metric for network nodes based on the
//! expected degree of the infected cluster, plus the epidemic simulators and
//! experiment harness used to validate it.

// Negated float comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod graph;
pub mod harness;
pub mod metrics;
pub mod netgen;
pub mod sim;
pub mod stats;
