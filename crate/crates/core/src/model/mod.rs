//! Intervals, trajectories and the underlying graph.

mod graph;
mod interval;
mod store;
mod trajectory;

pub use graph::{Edge, Graph, GraphError, VertexId};
pub use interval::{Interval, Time};
pub use store::TrajectoryStore;
pub use trajectory::{validate, Step, Trajectory, TrajectoryId, Violation};
