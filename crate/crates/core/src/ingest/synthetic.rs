use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IngestError;
use crate::model::{Edge, Graph, Step, Trajectory, TrajectoryStore, VertexId};
use crate::Scalar;

/// Random-walk workload. All ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadConfig {
    pub count: usize,
    /// Number of steps per walk.
    pub walk_len: RangeInclusive<usize>,
    /// Time spent at each vertex.
    pub dwell: RangeInclusive<i64>,
    pub start: RangeInclusive<i64>,
    pub seed: u64,
}

impl WorkloadConfig {
    fn check(&self) -> Result<(), IngestError> {
        if self.walk_len.is_empty() || *self.walk_len.start() == 0 {
            return Err(IngestError::InvalidParameter(
                "walk length range must be non-empty and start at 1 or more".into(),
            ));
        }
        if self.dwell.is_empty() || *self.dwell.start() <= 0 {
            return Err(IngestError::InvalidParameter("dwell range must be non-empty and positive".into()));
        }
        if self.start.is_empty() {
            return Err(IngestError::InvalidParameter("start time range must be non-empty".into()));
        }
        Ok(())
    }
}

/// Uniform random walks: start vertex, start time, length and every dwell are
/// drawn uniformly; each move picks a uniform neighbour. Walks on an isolated
/// vertex stop after one step. Trajectory ids are `0..count`.
pub fn generate_synthetic<S: Scalar>(
    graph: &Graph<S>,
    config: &WorkloadConfig,
) -> Result<TrajectoryStore, IngestError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = graph.vertex_count() as VertexId;
    let mut out = Vec::with_capacity(config.count);
    for id in 0..config.count as u64 {
        let len = rng.random_range(config.walk_len.clone());
        let mut v = rng.random_range(0..n);
        let mut t = rng.random_range(config.start.clone());
        let mut steps = Vec::with_capacity(len);
        for i in 0..len {
            if i > 0 {
                let next = graph.neighbors(v);
                if next.is_empty() {
                    break;
                }
                v = next[rng.random_range(0..next.len())].0;
            }
            let dwell = rng.random_range(config.dwell.clone());
            steps.push(Step::new(v, t, t + dwell));
            t += dwell;
        }
        out.push(Trajectory::new(id, steps));
    }
    Ok(TrajectoryStore::from_vec(out).expect("ids are distinct"))
}

/// Random spanning tree plus up to `extra_edges` further edges, with weights
/// uniform in `[weights.0, weights.1)`.
pub fn random_connected_graph<S: Scalar>(
    n: usize,
    extra_edges: usize,
    weights: (f64, f64),
    seed: u64,
) -> Result<Graph<S>, IngestError> {
    let (lo, hi) = weights;
    if n == 0 || !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(IngestError::InvalidParameter(format!("need n >= 1 and 0 < lo <= hi, got n={n}, [{lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| S::from_f64_lossy(if hi > lo { rng.random_range(lo..hi) } else { lo });
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(n - 1 + extra_edges);
    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    // Shuffle so the tree shape does not follow vertex ids.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    for i in 1..n {
        let (u, v) = (order[i], order[rng.random_range(0..i)]);
        seen.insert((u.min(v), u.max(v)));
        edges.push(Edge { u, v, weight: weight(&mut rng) });
    }
    let possible = n * (n - 1) / 2;
    let target = (n - 1 + extra_edges).min(possible);
    while edges.len() < target {
        let u = rng.random_range(0..n as VertexId);
        let v = rng.random_range(0..n as VertexId);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push(Edge { u, v, weight: weight(&mut rng) });
        }
    }
    Ok(Graph::new(n, edges)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    fn cfg(count: usize, seed: u64) -> WorkloadConfig {
        WorkloadConfig { count, walk_len: 1..=12, dwell: 1..=4, start: 0..=50, seed }
    }

    #[test]
    fn zero_count_is_empty() {
        let g = Graph::<f64>::chain(3);
        assert!(generate_synthetic(&g, &cfg(0, 1)).unwrap().is_empty());
    }

    #[test]
    fn walks_follow_edges_and_validate() {
        let g = Graph::<f64>::chain(3);
        let store = generate_synthetic(&g, &cfg(1000, 9)).unwrap();
        assert_eq!(store.len(), 1000);
        for t in &store {
            assert!(validate(t, &g).is_empty(), "{t:?}");
            for w in t.steps.windows(2) {
                assert!(g.has_edge(w[0].vertex, w[1].vertex));
            }
            assert!((1..=12).contains(&t.len()));
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let g = Graph::<f64>::grid(5, 5);
        assert_eq!(generate_synthetic(&g, &cfg(50, 4)).unwrap(), generate_synthetic(&g, &cfg(50, 4)).unwrap());
        assert_ne!(generate_synthetic(&g, &cfg(50, 4)).unwrap(), generate_synthetic(&g, &cfg(50, 5)).unwrap());
    }

    #[test]
    fn single_vertex_graph_gives_single_steps() {
        let g = Graph::<f64>::new(1, vec![]).unwrap();
        let store = generate_synthetic(&g, &cfg(5, 2)).unwrap();
        assert!(store.iter().all(|t| t.len() == 1));
    }

    #[test]
    fn bad_ranges() {
        let g = Graph::<f64>::chain(3);
        let mut c = cfg(5, 1);
        c.dwell = 0..=3;
        assert!(generate_synthetic(&g, &c).is_err());
        let mut c = cfg(5, 1);
        c.walk_len = 0..=3;
        assert!(generate_synthetic(&g, &c).is_err());
    }

    #[test]
    fn random_graph_shape() {
        let g: Graph<f64> = random_connected_graph(50, 30, (1.0, 5.0), 3).unwrap();
        assert_eq!(g.vertex_count(), 50);
        assert_eq!(g.edge_count(), 49 + 30);
        assert!(g.edges().iter().all(|e| (1.0..5.0).contains(&e.weight)));
        let full: Graph<f64> = random_connected_graph(4, 100, (1.0, 1.0), 3).unwrap();
        assert_eq!(full.edge_count(), 6);
    }
}
