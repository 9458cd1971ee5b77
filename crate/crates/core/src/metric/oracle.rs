//! Single-source shortest paths with a permanent per-source cache.
//!
//! Edge weights are converted to a common binary fixed-point scale whenever the
//! whole weight range fits in 126 bits (it does for any realistic graph), and
//! Dijkstra then runs on exact integer sums. A distance is therefore the
//! correctly ordered exact path length rounded once, so `d(u, v)` and `d(v, u)`
//! are bit-identical no matter which endpoint the search started from. Graphs
//! whose weights span too many binades fall back to plain floating point.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use super::MetricError;
use crate::model::{Graph, VertexId};
use crate::Scalar;

/// Cached shortest-path distances `d(u, v)` over a shared graph.
///
/// Rows are computed lazily, once per source, and are safe to request from
/// many threads; concurrent first requests for one source publish one row.
pub struct DistanceOracle<S = f64> {
    graph: Arc<Graph<S>>,
    fixed: Option<FixedPoint>,
    rows: Vec<OnceLock<Arc<[S]>>>,
    computed: AtomicUsize,
}

struct FixedPoint {
    adjacency: Vec<Vec<(VertexId, u128)>>,
    /// Value of one integer unit, `2^exponent`.
    unit: f64,
}

impl FixedPoint {
    fn new<S: Scalar>(graph: &Graph<S>) -> Option<Self> {
        let decoded: Vec<(u64, i32)> = graph
            .edges()
            .iter()
            .map(|e| {
                let (mut mantissa, exponent, _) = e.weight.integer_decode();
                let tz = mantissa.trailing_zeros();
                mantissa >>= tz;
                (mantissa, exponent as i32 + tz as i32)
            })
            .collect();
        let min_exp = decoded.iter().map(|&(_, e)| e).min().unwrap_or(0);
        let headroom = 126 - (usize::BITS - graph.vertex_count().leading_zeros()) as i32;
        let mut units = Vec::with_capacity(decoded.len());
        for (mantissa, exp) in decoded {
            let shift = exp - min_exp;
            let bits = (u64::BITS - mantissa.leading_zeros()) as i32 + shift;
            if bits > headroom {
                return None;
            }
            units.push((mantissa as u128) << shift);
        }
        let mut adjacency = vec![Vec::new(); graph.vertex_count()];
        for (e, &w) in graph.edges().iter().zip(&units) {
            adjacency[e.u as usize].push((e.v, w));
            adjacency[e.v as usize].push((e.u, w));
        }
        let unit = 2f64.powi(min_exp);
        (unit.is_normal()).then_some(FixedPoint { adjacency, unit })
    }

    fn dijkstra<S: Scalar>(&self, source: VertexId) -> Vec<S> {
        let n = self.adjacency.len();
        let mut dist = vec![u128::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = 0;
        heap.push(Reverse((0u128, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            for &(v, w) in &self.adjacency[u as usize] {
                let nd = d + w;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist.into_iter()
            .map(|d| if d == u128::MAX { S::infinity() } else { S::from_f64_lossy(d as f64 * self.unit) })
            .collect()
    }
}

/// Heap entry ordered by distance; distances are never NaN.
#[derive(PartialEq)]
struct Tentative<S>(S, VertexId);

impl<S: PartialOrd> Eq for Tentative<S> {}

impl<S: PartialOrd> PartialOrd for Tentative<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: PartialOrd> Ord for Tentative<S> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.partial_cmp(&self.0).unwrap_or(std::cmp::Ordering::Equal).then_with(|| other.1.cmp(&self.1))
    }
}

fn float_dijkstra<S: Scalar>(graph: &Graph<S>, source: VertexId) -> Vec<S> {
    let mut dist = vec![S::infinity(); graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = S::zero();
    heap.push(Tentative(S::zero(), source));
    while let Some(Tentative(d, u)) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for &(v, w) in graph.neighbors(u) {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Tentative(nd, v));
            }
        }
    }
    dist
}

impl<S: Scalar> DistanceOracle<S> {
    pub fn new(graph: Arc<Graph<S>>) -> Self {
        let fixed = FixedPoint::new(&graph);
        let rows = (0..graph.vertex_count()).map(|_| OnceLock::new()).collect();
        DistanceOracle { graph, fixed, rows, computed: AtomicUsize::new(0) }
    }

    pub fn graph(&self) -> &Graph<S> {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<Graph<S>> {
        Arc::clone(&self.graph)
    }

    /// Whether distances are computed with exact integer path sums.
    pub fn is_exact(&self) -> bool {
        self.fixed.is_some()
    }

    /// Distances from `source` to every vertex, computing and caching them on first use.
    pub fn row(&self, source: VertexId) -> Result<Arc<[S]>, MetricError> {
        let slot = self.rows.get(source as usize).ok_or(MetricError::UnknownVertex(source))?;
        Ok(Arc::clone(slot.get_or_init(|| {
            self.computed.fetch_add(1, Ordering::Relaxed);
            let row = match &self.fixed {
                Some(fixed) => fixed.dijkstra(source),
                None => float_dijkstra(&self.graph, source),
            };
            row.into()
        })))
    }

    /// Already-computed row, without triggering a search.
    pub fn cached_row(&self, source: VertexId) -> Option<Arc<[S]>> {
        self.rows.get(source as usize)?.get().cloned()
    }

    pub fn distance(&self, u: VertexId, v: VertexId) -> Result<S, MetricError> {
        if !self.graph.contains(v) {
            return Err(MetricError::UnknownVertex(v));
        }
        Ok(self.row(u)?[v as usize])
    }

    /// `e^{-d(u, v)}`, the spatial weight of a pair of simultaneous visits.
    pub fn affinity(&self, u: VertexId, v: VertexId) -> Result<S, MetricError> {
        Ok((-self.distance(u, v)?).exp())
    }

    /// Number of single-source searches performed so far.
    pub fn rows_computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }
}

impl<S> std::fmt::Debug for DistanceOracle<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistanceOracle")
            .field("vertices", &self.rows.len())
            .field("exact", &self.fixed.is_some())
            .field("rows_computed", &self.computed.load(Ordering::Relaxed))
            .finish()
    }
}

/// Exact distances from `source` to every vertex of `graph` (uncached).
pub fn shortest_path_row<S: Scalar>(graph: &Graph<S>, source: VertexId) -> Result<Vec<S>, MetricError> {
    if !graph.contains(source) {
        return Err(MetricError::UnknownVertex(source));
    }
    Ok(match FixedPoint::new(graph) {
        Some(fixed) => fixed.dijkstra(source),
        None => float_dijkstra(graph, source),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;

    fn graph(n: usize, edges: &[(VertexId, VertexId, f64)]) -> Arc<Graph<f64>> {
        Arc::new(Graph::new(n, edges.iter().map(|&(u, v, weight)| Edge { u, v, weight }).collect()).unwrap())
    }

    /// Minimum cost over every simple path, by exhaustive DFS.
    fn brute_force(g: &Graph<f64>, s: VertexId, t: VertexId) -> f64 {
        fn go(g: &Graph<f64>, u: VertexId, t: VertexId, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if u == t {
                *best = best.min(acc);
                return;
            }
            for &(v, w) in g.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    go(g, v, t, seen, acc + w, best);
                    seen[v as usize] = false;
                }
            }
        }
        let mut seen = vec![false; g.vertex_count()];
        seen[s as usize] = true;
        let mut best = f64::INFINITY;
        go(g, s, t, &mut seen, 0.0, &mut best);
        best
    }

    #[test]
    fn chain_row() {
        let oracle = DistanceOracle::new(Arc::new(Graph::<f64>::chain(3)));
        assert_eq!(&*oracle.row(0).unwrap(), &[0.0, 1.0, 2.0]);
        assert_eq!(oracle.distance(2, 2).unwrap(), 0.0);
        assert!(oracle.is_exact());
    }

    #[test]
    fn four_cycle_takes_cheap_side() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 10.0)]);
        let oracle = DistanceOracle::new(Arc::clone(&g));
        assert_eq!(brute_force(&g, 0, 2), 2.0);
        assert_eq!(oracle.distance(0, 2).unwrap(), 2.0);
        assert_eq!(oracle.distance(0, 3).unwrap(), brute_force(&g, 0, 3));
        assert_eq!(oracle.distance(0, 3).unwrap(), 3.0);
    }

    #[test]
    fn unknown_vertex() {
        let oracle = DistanceOracle::new(Arc::new(Graph::<f64>::chain(2)));
        assert!(matches!(oracle.row(5), Err(MetricError::UnknownVertex(5))));
        assert!(matches!(oracle.distance(0, 5), Err(MetricError::UnknownVertex(5))));
        assert!(shortest_path_row(oracle.graph(), 9).is_err());
    }

    #[test]
    fn rows_are_cached() {
        let oracle = DistanceOracle::new(Arc::new(Graph::<f64>::chain(5)));
        let a = oracle.row(1).unwrap();
        let b = oracle.row(1).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(oracle.rows_computed(), 1);
        oracle.row(2).unwrap();
        assert_eq!(oracle.rows_computed(), 2);
    }

    #[test]
    fn symmetric_bitwise_on_awkward_weights() {
        let g = graph(5, &[(0, 1, 0.1), (1, 2, 0.2), (2, 3, 0.3), (3, 4, 1e-3), (0, 4, 123.456), (1, 3, 0.7)]);
        let oracle = DistanceOracle::new(Arc::clone(&g));
        for u in 0..5 {
            for v in 0..5 {
                let duv = oracle.distance(u, v).unwrap();
                let dvu = oracle.distance(v, u).unwrap();
                assert_eq!(duv.to_bits(), dvu.to_bits(), "d({u},{v})");
                assert!((duv - brute_force(&g, u, v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn float_fallback_for_extreme_ranges() {
        let g = graph(3, &[(0, 1, 1e-200), (1, 2, 1e200)]);
        let oracle = DistanceOracle::new(Arc::clone(&g));
        assert!(!oracle.is_exact());
        assert_eq!(oracle.distance(0, 2).unwrap(), 1e200 + 1e-200);
    }

    #[test]
    fn concurrent_first_requests_publish_one_row() {
        let oracle = DistanceOracle::new(Arc::new(Graph::<f64>::grid(30, 30)));
        let rows: Vec<Arc<[f64]>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..8).map(|_| scope.spawn(|| oracle.row(17).unwrap())).collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(rows.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1])));
        assert_eq!(oracle.rows_computed(), 1);
    }

    #[test]
    fn f32_graphs() {
        let oracle = DistanceOracle::new(Arc::new(Graph::<f32>::grid(4, 4)));
        assert_eq!(oracle.distance(0, 15).unwrap(), 6.0f32);
    }
}
