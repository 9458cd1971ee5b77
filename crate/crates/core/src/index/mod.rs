//! Spatial and temporal candidate filters.

mod codec;
mod pivot;
mod tree;

use thiserror::Error;

use crate::metric::MetricError;
use crate::model::{Interval, TrajectoryId, Violation};

pub use pivot::{select_pivots, PivotIndex, PivotTable};
pub use tree::{TreeIndex, TreeNode, TreeStats, DEFAULT_LEAF_MIN};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot index an empty trajectory set")]
    EmptyStore,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trajectory {id}: {}", join(violations))]
    InvalidTrajectory { id: TrajectoryId, violations: Vec<Violation> },
    #[error("query interval {query} is not inside the indexed interval {index}")]
    QueryOutsideIndexInterval { query: Interval, index: Interval },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("malformed index file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
