//! GPS traces to a graph plus trajectories: points are clustered with k-means,
//! every non-empty cluster becomes a vertex and two clusters are joined when
//! some trace moves directly from one to the other.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::{Edge, Graph, Step, Trajectory, TrajectoryId, TrajectoryStore, VertexId};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    #[serde(rename = "trace_id")]
    pub trace: TrajectoryId,
    /// Seconds.
    pub timestamp: f64,
    pub x: f64,
    pub y: f64,
}

/// Reads `trace_id,timestamp,x,y` rows (with header).
pub fn read_gps_csv(reader: impl Read) -> Result<Vec<GpsPoint>, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let p: GpsPoint = row?;
        if !(p.timestamp.is_finite() && p.x.is_finite() && p.y.is_finite()) {
            return Err(IngestError::InvalidParameter(format!("non-finite value in trace {}", p.trace)));
        }
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpsConfig {
    pub clusters: usize,
    /// Seconds per time unit.
    pub time_resolution: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl GpsConfig {
    pub fn new(clusters: usize, time_resolution: f64, seed: u64) -> Self {
        GpsConfig { clusters, time_resolution, seed, max_iterations: 100, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GpsReport {
    pub points: usize,
    pub traces: usize,
    pub vertices: usize,
    pub edges: usize,
    /// Traces whose steps had to be widened to one time unit.
    pub repaired: usize,
    /// Traces outside the largest connected component.
    pub dropped: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centers: Vec<[f64; 2]>,
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Nearest center; ties go to the lowest index.
fn nearest(p: [f64; 2], centers: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, dist2(p, centers[0]));
    for (i, &c) in centers.iter().enumerate().skip(1) {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// First index of the largest value.
fn first_max(xs: impl Iterator<Item = f64>) -> usize {
    xs.enumerate().fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best }).0
}

/// Lloyd's algorithm with k-means++ seeding. Stops once no center moves by
/// `tolerance` or more, or after `max_iterations` rounds. A cluster that runs
/// empty is re-seeded at the point farthest from its current center.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64, max_iterations: usize, tolerance: f64) -> KMeans {
    assert!(!points.is_empty() && k > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            d2.iter()
                .position(|&w| {
                    u -= w;
                    u < 0.0 && w > 0.0
                })
                .unwrap_or_else(|| first_max(d2.iter().copied()))
        } else {
            first_max(d2.iter().copied())
        };
        let c = points[pick];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
    }

    let assign = |centers: &[[f64; 2]]| -> Vec<(usize, f64)> { points.iter().map(|&p| nearest(p, centers)).collect() };
    let mut iterations = 0;
    loop {
        let assigned = assign(&centers);
        iterations += 1;
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (&p, &(c, _)) in points.iter().zip(&assigned) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        let mut moved = 0.0f64;
        for c in 0..k {
            let next = if counts[c] > 0 {
                [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64]
            } else {
                points[first_max(assigned.iter().map(|&(_, d)| d))]
            };
            moved = moved.max(dist2(next, centers[c]).sqrt());
            centers[c] = next;
        }
        if moved < tolerance || iterations >= max_iterations {
            break;
        }
    }
    let assignment = assign(&centers).into_iter().map(|(c, _)| c).collect();
    KMeans { centers, assignment, iterations }
}

/// Steps of one trace as `(cluster, start)` with the end of the last step.
/// Consecutive points in the same cluster merge; a step that would be empty is
/// widened to one unit by pushing later steps back.
fn trace_steps(points: &[(i64, usize)]) -> (Vec<(usize, i64)>, i64, bool) {
    let mut steps: Vec<(usize, i64)> = Vec::new();
    for &(bucket, cluster) in points {
        if steps.last().is_none_or(|&(c, _)| c != cluster) {
            steps.push((cluster, bucket));
        }
    }
    let mut repaired = false;
    for i in 1..steps.len() {
        if steps[i].1 <= steps[i - 1].1 {
            steps[i].1 = steps[i - 1].1 + 1;
            repaired = true;
        }
    }
    let last_bucket = points.last().expect("non-empty trace").0;
    let end = (last_bucket + 1).max(steps.last().expect("non-empty").1 + 1);
    (steps, end, repaired)
}

pub fn gps_to_graph<S: Scalar>(
    points: &[GpsPoint],
    config: &GpsConfig,
) -> Result<(Graph<S>, TrajectoryStore, GpsReport), IngestError> {
    if config.clusters < 2 {
        return Err(IngestError::InvalidParameter("cluster count must be at least 2".into()));
    }
    if !(config.time_resolution > 0.0) || !config.time_resolution.is_finite() {
        return Err(IngestError::InvalidParameter("time resolution must be positive".into()));
    }
    let mut traces: BTreeMap<TrajectoryId, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        traces.entry(p.trace).or_default().push(i);
    }
    if !traces.values().any(|t| t.len() >= 2) {
        return Err(IngestError::TooFewPoints);
    }
    for members in traces.values_mut() {
        members.sort_by(|&a, &b| points[a].timestamp.total_cmp(&points[b].timestamp));
    }

    let xy: Vec<[f64; 2]> = points.iter().map(|p| [p.x, p.y]).collect();
    let km = kmeans(&xy, config.clusters, config.seed, config.max_iterations, config.tolerance);

    let mut repaired = 0;
    let mut raw = Vec::with_capacity(traces.len());
    for (&id, members) in &traces {
        let seq: Vec<(i64, usize)> = members
            .iter()
            .map(|&i| ((points[i].timestamp / config.time_resolution).floor() as i64, km.assignment[i]))
            .collect();
        let (steps, end, fixed) = trace_steps(&seq);
        repaired += usize::from(fixed);
        raw.push((id, steps, end));
    }

    let mut pairs = BTreeSet::new();
    for (_, steps, _) in &raw {
        for w in steps.windows(2) {
            pairs.insert((w[0].0.min(w[1].0), w[0].0.max(w[1].0)));
        }
    }
    // Union-find over clusters to keep the largest connected piece.
    let mut parent: Vec<usize> = (0..config.clusters).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in &pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let used: BTreeSet<usize> = km.assignment.iter().copied().collect();
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &used {
        *sizes.entry(find(&mut parent, c)).or_default() += 1;
    }
    // Largest component; ties go to the one with the smallest cluster index.
    let keep = sizes.iter().fold((usize::MAX, 0), |best, (&r, &n)| if n > best.1 { (r, n) } else { best }).0;
    let kept: Vec<usize> = used.iter().copied().filter(|&c| find(&mut parent, c) == keep).collect();
    let mut vertex_of = vec![None; config.clusters];
    for (v, &c) in kept.iter().enumerate() {
        vertex_of[c] = Some(v as VertexId);
    }

    let edges: Vec<Edge<S>> = pairs
        .iter()
        .filter_map(|&(a, b)| {
            let (u, v) = (vertex_of[a]?, vertex_of[b]?);
            let d = dist2(km.centers[a], km.centers[b]).sqrt().max(f64::MIN_POSITIVE);
            let w = S::from_f64_lossy(d);
            Some(Edge { u, v, weight: if w > S::zero() { w } else { S::min_positive_value() } })
        })
        .collect();
    let mut dropped = 0;
    let mut trajectories = Vec::new();
    for (id, steps, end) in raw {
        if vertex_of[steps[0].0].is_none() {
            dropped += 1;
            continue;
        }
        let ends = steps.iter().skip(1).map(|s| s.1).chain(std::iter::once(end));
        let steps = steps
            .iter()
            .zip(ends)
            .map(|(&(c, start), stop)| Step::new(vertex_of[c].expect("same component"), start, stop))
            .collect();
        trajectories.push(Trajectory::new(id, steps));
    }
    let graph = Graph::new(kept.len(), edges)?;
    let report = GpsReport {
        points: points.len(),
        traces: traces.len(),
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
        repaired,
        dropped,
        iterations: km.iterations,
    };
    let store = TrajectoryStore::from_vec(trajectories).expect("trace ids are distinct");
    Ok((graph, store, report))
}
