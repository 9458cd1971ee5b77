//! Top-k spatio-temporal similarity search for trajectories that move along
//! the vertices of a weighted graph.
//!
//! Two trajectories are compared over a time window by summing, for every
//! instant they share, `e^{-d}` where `d` is the shortest-path distance between
//! their current vertices. Queries can scan every trajectory or go through a
//! [`PivotIndex`] or [`TreeIndex`] candidate filter first.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod index;
pub mod ingest;
pub mod metric;
pub mod model;
pub mod query;
mod scalar;

pub use index::{IndexError, PivotIndex, TreeIndex};
pub use metric::{DistanceOracle, MetricError, PreparedQuery, SimilarityBudget};
pub use model::{Graph, Interval, Step, Trajectory, TrajectoryId, TrajectoryStore, VertexId};
pub use scalar::Scalar;

pub type Graph32 = Graph<f32>;
pub type Graph64 = Graph<f64>;
pub type DistanceOracle32 = DistanceOracle<f32>;
pub type DistanceOracle64 = DistanceOracle<f64>;
pub type PivotIndex32 = PivotIndex<f32>;
pub type PivotIndex64 = PivotIndex<f64>;
pub type TreeIndex32 = TreeIndex<f32>;
pub type TreeIndex64 = TreeIndex<f64>;
