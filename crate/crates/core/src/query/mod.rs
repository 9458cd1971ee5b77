//! Top-k query evaluation, result quality and the benchmark protocol.

mod engine;
mod protocol;
mod ssr;

use thiserror::Error;

use crate::index::IndexError;
use crate::metric::MetricError;
use crate::model::{Interval, TrajectoryId};

pub use engine::{topk, Hit, IndexKind, Indexes, Kernel, QueryOptions, QuerySpec, TopKResult};
pub use protocol::{
    run_protocol, BuildRecord, ProtocolConfig, ProtocolReport, QueryRecord, SummaryRow, TimingRow, HISTOGRAM_BINS,
};
pub use ssr::{ssr, sum_ratio};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("query interval is empty")]
    EmptyWindow,
    #[error("query trajectory has no steps inside {0}")]
    EmptyQuery(Interval),
    #[error("radius is required for the {0} index")]
    MissingRadius(IndexKind),
    #[error("radius must be a non-negative number, got {0}")]
    InvalidRadius(f64),
    #[error("no {0} index was provided")]
    IndexMissing(IndexKind),
    #[error("trajectory {0} is not in the store")]
    NotInStore(TrajectoryId),
    #[error("the trajectory store is empty")]
    EmptyStore,
    #[error("reference similarity sum is zero")]
    ZeroReference,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Index(#[from] IndexError),
}
