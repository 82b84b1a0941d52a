//! Sandpile growth and collapse on weighted graphs.
//!
//! The crate simulates p-Laplacian gradient flows on a weighted graph and
//! their `p -> ∞` limits: projected dynamics onto a slope-constraint set
//! (sandpile growth under a source) and the collapse of an unstable initial
//! pile. A transport layer checks the growth solutions against the
//! Kantorovich dual, and a scenario layer drives everything from JSON files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod io;
pub mod proximal;
pub mod scenario;
pub mod transport;

pub use error::{Error, Result};
pub use graph::{DistanceTable, VertexField, WeightedGraph};
pub use proximal::{ConstraintKind, ConstraintSet};
