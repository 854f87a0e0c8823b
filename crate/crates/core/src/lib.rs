//! Streaming coresets for the probabilistic Euclidean k-median problem.
//!
//! Uncertain points are modelled as [`ProbabilisticNode`]s: finite discrete
//! distributions over locations in `R^d` with a positive weight. A node is
//! always assigned to a single center, and the cost of a center set is the
//! weighted expected distance of every node to its expected-nearest center.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: domain types and expected-cost arithmetic.
//! * [`onemedian`]: Weiszfeld iteration for weighted geometric medians.
//! * [`centers`]: k-median++ seeding plus Lloyd alternation on weighted points.
//! * [`coreset`]: the bucketed importance-sampling summary.
//! * [`stream`]: the Merge & Reduce cascade for single-pass construction.
//! * [`solver`]: the probabilistic Lloyd/k-median++ solver (P-LLOYD++).
//! * [`eval`]: summary-versus-full cost reports and run statistics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and the
//! command line live in the companion `probi` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style guards are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod centers;
pub mod coreset;
mod error;
pub mod eval;
pub mod model;
pub mod onemedian;
pub mod rng;
pub mod solver;
pub mod stream;

pub use error::{Error, Result};
pub use model::{
    assign_expected_nearest, euclidean_distance, expected_clustering_cost, expected_node_cost,
    node_center_of_gravity, node_spread, CenterSet, CoresetNode, Point, ProbabilisticNode,
    Realization, WeightedNode, WeightedPoint, PROBABILITY_SLACK,
};
