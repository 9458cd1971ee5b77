//! Reading and writing datasets, synthetic workloads and GPS conversion.

mod files;
mod gps;
mod synthetic;

use thiserror::Error;

use crate::model::{GraphError, TrajectoryId, Violation};

pub use files::{
    load_graph, load_trajectories, read_graph, read_trajectories, save_graph, save_trajectories, write_graph,
    write_trajectories,
};
pub use gps::{gps_to_graph, kmeans, read_gps_csv, GpsConfig, GpsPoint, GpsReport, KMeans};
pub use synthetic::{generate_synthetic, random_connected_graph, WorkloadConfig};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("trajectory {id}: {}", violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation { id: TrajectoryId, violations: Vec<Violation> },
    #[error("need at least one trace with two or more points")]
    TooFewPoints,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
