//! Spatio-temporal similarity of two trajectories over a time window.
//!
//! `Sim(Q, T, s) = 1/|s| · Σ_{i,j} |s ∩ t_i ∩ s_j| · e^{-d(v_i, u_j)}`
//!
//! Only step pairs that overlap in time contribute, and in a chained
//! trajectory those pairs can be enumerated with a two-pointer merge in time
//! order. The merge also yields an optimistic bound at every step: everything
//! up to the merge frontier is known, and each remaining unit step of the
//! window contributes at most `e^0 = 1`.

use std::sync::OnceLock;

use super::{DistanceOracle, MetricError};
use crate::model::{Interval, Step, Trajectory, VertexId};
use crate::Scalar;

/// Early-termination threshold for a single evaluation.
///
/// When enabled, evaluation stops as soon as the best similarity still
/// reachable falls strictly below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityBudget<S> {
    threshold: S,
    enabled: bool,
}

impl<S: Scalar> SimilarityBudget<S> {
    pub fn disabled() -> Self {
        SimilarityBudget { threshold: S::zero(), enabled: false }
    }

    /// Abort below `threshold`, clamped into `[0, 1]`.
    pub fn below(threshold: S) -> Self {
        let threshold = threshold.max(S::zero()).min(S::one());
        SimilarityBudget { threshold, enabled: true }
    }

    pub fn threshold(&self) -> S {
        self.threshold
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }
}

impl<S: Scalar> Default for SimilarityBudget<S> {
    fn default() -> Self {
        Self::disabled()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Complete,
    /// The budget fired; `value` is the upper bound at the abort point.
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<S> {
    pub value: S,
    pub completion: Completion,
    /// Pair positions visited by the merge; never exceeds `|Q| + |T|`.
    pub merge_steps: usize,
}

impl<S> Evaluation<S> {
    pub fn is_complete(&self) -> bool {
        self.completion == Completion::Complete
    }
}

/// Spatial weight of a simultaneous visit of `query_vertex` (at query step
/// `query_step`) and `data_vertex`.
pub trait PairWeight<S> {
    fn weight(&self, query_step: usize, query_vertex: VertexId, data_vertex: VertexId) -> S;
}

impl<S, F: Fn(usize, VertexId, VertexId) -> S> PairWeight<S> for F {
    #[inline]
    fn weight(&self, query_step: usize, query_vertex: VertexId, data_vertex: VertexId) -> S {
        self(query_step, query_vertex, data_vertex)
    }
}

/// Two-pointer evaluation over `window` (must be non-empty).
///
/// Pairs are visited in time order whichever side is the query, so swapping
/// the arguments sums the same terms in the same order.
pub fn merge_kernel<S: Scalar, W: PairWeight<S>>(
    query: &[Step],
    data: &[Step],
    window: Interval,
    weights: &W,
    budget: SimilarityBudget<S>,
) -> Evaluation<S> {
    debug_assert!(!window.is_empty());
    let span = S::from_len(window.len());
    let (lo, hi) = (window.start(), window.end());
    let mut i = query.partition_point(|s| s.interval.end() <= lo);
    let mut j = data.partition_point(|s| s.interval.end() <= lo);
    let slack = S::epsilon() * S::from_usize(query.len() + data.len() + 2).unwrap_or_else(S::one);
    let mut sum = S::zero();
    let mut merge_steps = 0;

    while i < query.len() && j < data.len() {
        merge_steps += 1;
        let (q, t) = (&query[i], &data[j]);
        if q.interval.start().max(t.interval.start()) >= hi {
            break;
        }
        let shared = window.intersect(&q.interval).overlap(&t.interval);
        if shared > 0 {
            sum += S::from_len(shared) * weights.weight(i, q.vertex, t.vertex);
        }
        let (qe, te) = (q.interval.end(), t.interval.end());
        let frontier = qe.min(te);
        if qe <= te {
            i += 1;
        }
        if te <= qe {
            j += 1;
        }
        if frontier >= hi {
            break;
        }
        if budget.enabled {
            let remaining = S::from_len(hi - frontier.max(lo));
            let bound = (sum + remaining) / span;
            if bound + slack < budget.threshold {
                return Evaluation { value: bound, completion: Completion::Aborted, merge_steps };
            }
        }
    }
    Evaluation { value: sum / span, completion: Completion::Complete, merge_steps }
}

fn check_vertices<S: Scalar>(oracle: &DistanceOracle<S>, t: &Trajectory) -> Result<(), MetricError> {
    match t.vertices().find(|&v| !oracle.graph().contains(v)) {
        Some(v) => Err(MetricError::UnknownVertex(v)),
        None => Ok(()),
    }
}

/// `Sim(query, data, window)` using the merge; honours `budget`.
pub fn similarity<S: Scalar>(
    query: &Trajectory,
    data: &Trajectory,
    window: Interval,
    oracle: &DistanceOracle<S>,
    budget: SimilarityBudget<S>,
) -> Result<Evaluation<S>, MetricError> {
    if window.is_empty() {
        return Err(MetricError::EmptyQueryInterval);
    }
    check_vertices(oracle, query)?;
    check_vertices(oracle, data)?;
    let weights = |_: usize, u: VertexId, v: VertexId| -> S {
        let row = oracle.row(u).expect("vertex checked");
        (-row[v as usize]).exp()
    };
    Ok(merge_kernel(&query.steps, &data.steps, window, &weights, budget))
}

/// `Dist = 1 - Sim`, always fully evaluated.
pub fn distance<S: Scalar>(
    query: &Trajectory,
    data: &Trajectory,
    window: Interval,
    oracle: &DistanceOracle<S>,
) -> Result<S, MetricError> {
    let eval = similarity(query, data, window, oracle, SimilarityBudget::disabled())?;
    Ok(S::one() - eval.value)
}

/// Re-expresses a distance over `inner` as the distance over the enclosing
/// window `outer`, valid when the query lives exactly on `inner`:
/// `1 - |inner|/|outer| + |inner|/|outer| · dist`.
pub fn rescale_distance<S: Scalar>(dist: S, inner: Interval, outer: Interval) -> Result<S, MetricError> {
    if inner.is_empty() || outer.is_empty() {
        return Err(MetricError::EmptyQueryInterval);
    }
    if !inner.is_subset_of(&outer) {
        return Err(MetricError::IntervalNotNested { inner, outer });
    }
    let ratio = S::from_len(inner.len()) / S::from_len(outer.len());
    Ok(S::one() - ratio + ratio * dist)
}

/// Number of pointer advances the merge performs for `(query, data, window)`.
pub fn merge_step_count(query: &Trajectory, data: &Trajectory, window: Interval) -> usize {
    if window.is_empty() {
        return 0;
    }
    let unit = |_: usize, _: VertexId, _: VertexId| 1.0f64;
    merge_kernel(&query.steps, &data.steps, window, &unit, SimilarityBudget::disabled()).merge_steps
}

/// Reference evaluation over every step pair, `O(|Q|·|T|)`.
pub fn naive_similarity<S: Scalar>(
    query: &Trajectory,
    data: &Trajectory,
    window: Interval,
    oracle: &DistanceOracle<S>,
) -> Result<S, MetricError> {
    if window.is_empty() {
        return Err(MetricError::EmptyQueryInterval);
    }
    check_vertices(oracle, query)?;
    check_vertices(oracle, data)?;
    let mut sum = S::zero();
    for q in &query.steps {
        let row = oracle.row(q.vertex)?;
        for t in &data.steps {
            let shared = window.intersect(&q.interval).overlap(&t.interval);
            if shared > 0 {
                sum += S::from_len(shared) * (-row[t.vertex as usize]).exp();
            }
        }
    }
    Ok(sum / S::from_len(window.len()))
}

/// A query trajectory bound to an oracle, with `e^{-d}` rows memoized per
/// distinct query vertex for the lifetime of the query.
pub struct PreparedQuery<'o, S: Scalar> {
    oracle: &'o DistanceOracle<S>,
    trajectory: Trajectory,
    slot_of_step: Vec<usize>,
    vertices: Vec<VertexId>,
    rows: Vec<OnceLock<Box<[S]>>>,
}

impl<'o, S: Scalar> PreparedQuery<'o, S> {
    pub fn new(oracle: &'o DistanceOracle<S>, trajectory: Trajectory) -> Result<Self, MetricError> {
        check_vertices(oracle, &trajectory)?;
        let mut vertices: Vec<VertexId> = trajectory.vertices().collect();
        vertices.sort_unstable();
        vertices.dedup();
        let slot_of_step = trajectory.vertices().map(|v| vertices.binary_search(&v).expect("vertex present")).collect();
        let rows = vertices.iter().map(|_| OnceLock::new()).collect();
        Ok(PreparedQuery { oracle, trajectory, slot_of_step, vertices, rows })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn oracle(&self) -> &'o DistanceOracle<S> {
        self.oracle
    }

    #[inline]
    fn affinity_row(&self, slot: usize) -> &[S] {
        self.rows[slot].get_or_init(|| {
            let row = self.oracle.row(self.vertices[slot]).expect("vertex checked");
            row.iter().map(|&d| (-d).exp()).collect()
        })
    }

    /// `Sim(query, data, window)`; `data` must only use vertices of the oracle's graph.
    pub fn evaluate(&self, data: &Trajectory, window: Interval, budget: SimilarityBudget<S>) -> Evaluation<S> {
        merge_kernel(&self.trajectory.steps, &data.steps, window, self, budget)
    }
}

impl<S: Scalar> PairWeight<S> for PreparedQuery<'_, S> {
    #[inline]
    fn weight(&self, query_step: usize, _query_vertex: VertexId, data_vertex: VertexId) -> S {
        self.affinity_row(self.slot_of_step[query_step])[data_vertex as usize]
    }
}
