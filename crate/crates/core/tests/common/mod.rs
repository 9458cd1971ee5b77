//! Reference implementations used as test oracles. Nothing here calls the
//! library's similarity, distance or filtering code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajsim::model::Edge;
use trajsim::{Graph, Interval, Step, Trajectory, TrajectoryStore};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All-pairs shortest paths.
pub fn floyd_warshall(graph: &Graph<f64>) -> Vec<Vec<f64>> {
    let n = graph.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in graph.edges() {
        let (u, v) = (e.u as usize, e.v as usize);
        d[u][v] = d[u][v].min(e.weight);
        d[v][u] = d[v][u].min(e.weight);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Vertex occupied at time unit `tau`.
pub fn vertex_at(t: &Trajectory, tau: i64) -> Option<usize> {
    t.steps.iter().find(|s| s.interval.start() <= tau && tau < s.interval.end()).map(|s| s.vertex as usize)
}

/// Similarity by walking every time unit of the window.
pub fn unit_similarity(q: &Trajectory, t: &Trajectory, window: Interval, apsp: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    for tau in window.start()..window.end() {
        if let (Some(a), Some(b)) = (vertex_at(q, tau), vertex_at(t, tau)) {
            sum += (-apsp[a][b]).exp();
        }
    }
    sum / (window.end() - window.start()) as f64
}

pub fn unit_distance(q: &Trajectory, t: &Trajectory, window: Interval, apsp: &[Vec<f64>]) -> f64 {
    1.0 - unit_similarity(q, t, window, apsp)
}

/// Every similarity computed, sorted by (similarity desc, id asc), cut at `k`.
pub fn brute_topk(
    q: &Trajectory,
    window: Interval,
    store: &TrajectoryStore,
    apsp: &[Vec<f64>],
    k: usize,
) -> Vec<(u64, f64)> {
    let mut all: Vec<(u64, f64)> = store.iter().map(|t| (t.id, unit_similarity(q, t, window, apsp))).collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn lifespan(t: &Trajectory) -> (i64, i64) {
    (t.steps[0].interval.start(), t.steps.last().unwrap().interval.end())
}

/// Ids of trajectories present at some unit of `window`.
pub fn temporal_set(store: &TrajectoryStore, window: Interval) -> BTreeSet<u64> {
    store
        .iter()
        .filter(|t| {
            let (a, b) = lifespan(t);
            a < window.end() && window.start() < b
        })
        .map(|t| t.id)
        .collect()
}

/// Pivot vertices by visit count (desc), then vertex id.
pub fn brute_pivots(store: &TrajectoryStore, h: usize) -> Vec<u32> {
    let mut counts = std::collections::BTreeMap::<u32, usize>::new();
    for t in store {
        for s in &t.steps {
            *counts.entry(s.vertex).or_default() += 1;
        }
    }
    let mut v: Vec<(u32, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().take(h).map(|p| p.0).collect()
}

pub fn stationary(vertex: u32, t: Interval) -> Trajectory {
    Trajectory::new(u64::MAX, vec![Step::new(vertex, t.start(), t.end())])
}

/// Ids surviving `max_i |Dist(Q,P_i,t) - Dist(T,P_i,t)| <= r`.
pub fn brute_pivot_filter(
    q: &Trajectory,
    store: &TrajectoryStore,
    pivots: &[u32],
    t: Interval,
    r: f64,
    apsp: &[Vec<f64>],
) -> BTreeSet<u64> {
    let ps: Vec<Trajectory> = pivots.iter().map(|&p| stationary(p, t)).collect();
    let qd: Vec<f64> = ps.iter().map(|p| unit_distance(q, p, t, apsp)).collect();
    store
        .iter()
        .filter(|traj| ps.iter().zip(&qd).all(|(p, &d)| (d - unit_distance(traj, p, t, apsp)).abs() <= r))
        .map(|traj| traj.id)
        .collect()
}

/// Random connected graph: each vertex hooks to an earlier one, plus `extra` chords.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Graph<f64> {
    let mut pairs = BTreeSet::new();
    let mut edges = Vec::new();
    for v in 1..n as u32 {
        let u = rng.random_range(0..v);
        pairs.insert((u, v));
        edges.push(Edge { u, v, weight: rng.random_range(0.05..3.0) });
    }
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
        if a != b && pairs.insert((a.min(b), a.max(b))) {
            edges.push(Edge { u: a, v: b, weight: rng.random_range(0.05..3.0) });
        }
    }
    Graph::new(n, edges).expect("connected by construction")
}

/// Random walk with `1..=max_len` steps and dwell `1..=max_dwell`, starting in `starts`.
pub fn random_walk(
    rng: &mut ChaCha8Rng,
    graph: &Graph<f64>,
    id: u64,
    max_len: usize,
    max_dwell: i64,
    starts: std::ops::Range<i64>,
) -> Trajectory {
    let len = rng.random_range(1..=max_len);
    let mut v = rng.random_range(0..graph.vertex_count() as u32);
    let mut t = rng.random_range(starts);
    let mut steps = Vec::new();
    for i in 0..len {
        if i > 0 {
            let ns = graph.neighbors(v);
            if ns.is_empty() {
                break;
            }
            v = ns[rng.random_range(0..ns.len())].0;
        }
        let d = rng.random_range(1..=max_dwell);
        steps.push(Step::new(v, t, t + d));
        t += d;
    }
    Trajectory::new(id, steps)
}

pub fn random_store(
    rng: &mut ChaCha8Rng,
    graph: &Graph<f64>,
    count: usize,
    max_len: usize,
    max_dwell: i64,
    starts: std::ops::Range<i64>,
) -> TrajectoryStore {
    let ts = (0..count as u64).map(|id| random_walk(rng, graph, id, max_len, max_dwell, starts.clone())).collect();
    TrajectoryStore::from_vec(ts).unwrap()
}

/// Random non-empty sub-window of `[lo, hi)`.
pub fn random_window(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Interval {
    let a = rng.random_range(lo..hi);
    let b = rng.random_range(a + 1..=hi);
    Interval::new(a, b).unwrap()
}

/// Expected tree layout as pre-order `(median, sorted roster)` pairs, built by
/// re-running the routing rule on `(id, start, end)` triples.
pub fn simulate_tree(items: &[(u64, i64, i64)], leaf_min: usize) -> Vec<(Option<i64>, Vec<u64>)> {
    fn go(
        items: Vec<(u64, i64, i64)>,
        leaf_min: usize,
        one_sided_before: bool,
        out: &mut Vec<(Option<i64>, Vec<u64>)>,
    ) {
        let ids = |v: &[(u64, i64, i64)]| {
            let mut ids: Vec<u64> = v.iter().map(|x| x.0).collect();
            ids.sort_unstable();
            ids
        };
        if items.len() <= leaf_min {
            out.push((None, ids(&items)));
            return;
        }
        let mut ends: Vec<i64> = items.iter().map(|x| x.2).collect();
        ends.sort_unstable();
        let m = ends[(ends.len() - 1) / 2];
        let left: Vec<_> = items.iter().copied().filter(|x| x.2 <= m).collect();
        let right: Vec<_> = items.iter().copied().filter(|x| x.2 > m && x.1 >= m).collect();
        let here: Vec<_> = items.iter().copied().filter(|x| x.2 > m && x.1 < m).collect();
        let n = items.len();
        let one_sided = left.is_empty() || right.is_empty();
        if left.len() == n || right.len() == n || here.len() == n || (one_sided && one_sided_before) {
            out.push((None, ids(&items)));
            return;
        }
        out.push((Some(m), ids(&here)));
        if !left.is_empty() {
            go(left, leaf_min, one_sided, out);
        }
        if !right.is_empty() {
            go(right, leaf_min, one_sided, out);
        }
    }
    let mut out = Vec::new();
    go(items.to_vec(), leaf_min, false, &mut out);
    out
}
