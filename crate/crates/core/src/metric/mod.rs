//! Shortest-path distances and the similarity/distance kernel.

mod oracle;
mod similarity;

use thiserror::Error;

use crate::model::{Interval, VertexId};

pub use oracle::{shortest_path_row, DistanceOracle};
pub use similarity::{
    distance, merge_kernel, merge_step_count, naive_similarity, rescale_distance, similarity, Completion, Evaluation,
    PairWeight, PreparedQuery, SimilarityBudget,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("query interval is empty")]
    EmptyQueryInterval,
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(VertexId),
    #[error("interval {inner} is not contained in {outer}")]
    IntervalNotNested { inner: Interval, outer: Interval },
}
