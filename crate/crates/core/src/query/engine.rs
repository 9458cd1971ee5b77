use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::QueryError;
use crate::index::{IndexError, PivotIndex, TreeIndex};
use crate::metric::{naive_similarity, DistanceOracle, PreparedQuery, SimilarityBudget};
use crate::model::{Interval, Trajectory, TrajectoryId, TrajectoryStore};
use crate::Scalar;

/// Which candidate filter a query goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Exact,
    Pivot,
    Tree,
}

impl IndexKind {
    pub const ALL: [IndexKind; 3] = [IndexKind::Exact, IndexKind::Pivot, IndexKind::Tree];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexKind::Exact => "exact",
            IndexKind::Pivot => "pivot",
            IndexKind::Tree => "tree",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(IndexKind::Exact),
            "pivot" => Ok(IndexKind::Pivot),
            "tree" => Ok(IndexKind::Tree),
            other => Err(format!("unknown index type `{other}` (expected exact, pivot or tree)")),
        }
    }
}

/// How candidates are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Linear merge with optional upper bounding.
    #[default]
    Merge,
    /// Double loop over all step pairs; never aborts early.
    Naive,
}

/// A top-k query `(Q, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec<S = f64> {
    pub query: Trajectory,
    pub window: Interval,
    pub k: usize,
    pub radius: Option<S>,
    pub index: IndexKind,
}

impl<S: Scalar> QuerySpec<S> {
    /// Exact query over the lifespan of `query`.
    pub fn new(query: Trajectory, k: usize) -> Self {
        let window = query.lifespan();
        QuerySpec { query, window, k, radius: None, index: IndexKind::Exact }
    }

    pub fn window(mut self, window: Interval) -> Self {
        self.window = window;
        self
    }

    pub fn via(mut self, index: IndexKind, radius: Option<S>) -> Self {
        self.index = index;
        self.radius = radius;
        self
    }

    fn check(&self) -> Result<(), QueryError> {
        if self.k == 0 {
            return Err(QueryError::InvalidK);
        }
        if self.window.is_empty() {
            return Err(QueryError::EmptyWindow);
        }
        if self.index != IndexKind::Exact {
            match self.radius {
                None => return Err(QueryError::MissingRadius(self.index)),
                Some(r) if !(r >= S::zero()) => return Err(QueryError::InvalidRadius(r.to_f64_lossless())),
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// Indexes available to [`topk`].
#[derive(Debug, Clone, Copy)]
pub struct Indexes<'a, S = f64> {
    pub pivot: Option<&'a PivotIndex<S>>,
    pub tree: Option<&'a TreeIndex<S>>,
}

impl<S> Default for Indexes<'_, S> {
    fn default() -> Self {
        Indexes { pivot: None, tree: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOptions {
    /// Abandon evaluations that can no longer reach the current k-th best.
    pub bounding: bool,
    pub parallel: bool,
    pub kernel: Kernel,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { bounding: true, parallel: true, kernel: Kernel::Merge }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit<S = f64> {
    pub id: TrajectoryId,
    pub similarity: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopKResult<S = f64> {
    /// Best first; ties broken by ascending id.
    pub hits: Vec<Hit<S>>,
    pub candidate_count: usize,
    pub filter_time: Duration,
    pub eval_time: Duration,
    /// Merge pointer advances summed over all candidates.
    pub merge_steps: u64,
    /// The window was outside the index interval and the whole store was scanned.
    pub fell_back: bool,
}

impl<S: Scalar> TopKResult<S> {
    pub fn ids(&self) -> Vec<TrajectoryId> {
        self.hits.iter().map(|h| h.id).collect()
    }

    pub fn similarity_sum(&self) -> S {
        self.hits.iter().map(|h| h.similarity).sum()
    }
}

/// Heap entry ordered so that the worst hit is the maximum.
#[derive(Clone, Copy)]
struct Ranked<S>(Hit<S>);

impl<S: Scalar> Ord for Ranked<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.similarity.partial_cmp(&self.0.similarity).unwrap_or(Ordering::Equal).then(self.0.id.cmp(&other.0.id))
    }
}

impl<S: Scalar> PartialOrd for Ranked<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> PartialEq for Ranked<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Ranked<S> {}

/// Bounded collection of the `k` best hits seen so far.
struct TopK<S> {
    k: usize,
    heap: BinaryHeap<Ranked<S>>,
    merge_steps: u64,
}

impl<S: Scalar> TopK<S> {
    fn new(k: usize) -> Self {
        TopK { k, heap: BinaryHeap::with_capacity(k + 1), merge_steps: 0 }
    }

    fn budget(&self, bounding: bool) -> SimilarityBudget<S> {
        match self.heap.peek() {
            Some(worst) if bounding && self.heap.len() == self.k => SimilarityBudget::below(worst.0.similarity),
            _ => SimilarityBudget::disabled(),
        }
    }

    fn offer(&mut self, hit: Hit<S>) {
        self.heap.push(Ranked(hit));
        if self.heap.len() > self.k {
            self.heap.pop();
        }
    }

    fn merge(mut self, other: TopK<S>) -> Self {
        self.merge_steps += other.merge_steps;
        for r in other.heap {
            self.offer(r.0);
        }
        self
    }

    fn into_sorted(self) -> Vec<Hit<S>> {
        self.heap.into_sorted_vec().into_iter().map(|r| r.0).collect()
    }
}

/// Answers a top-k query.
///
/// The exact path scores every stored trajectory. The index paths score only
/// the filter's candidates that overlap the window in time; if fewer than `k`
/// of those score above zero, the lowest-id trajectories outside the
/// candidate set join with similarity zero, as they would in an exhaustive
/// scan under the id tie-break.
/// A window outside the index interval falls back to the exact path.
pub fn topk<S: Scalar>(
    spec: &QuerySpec<S>,
    store: &TrajectoryStore,
    indexes: Indexes<'_, S>,
    oracle: &DistanceOracle<S>,
    options: QueryOptions,
) -> Result<TopKResult<S>, QueryError> {
    spec.check()?;
    let restricted = spec.query.restrict(&spec.window).ok_or(QueryError::EmptyQuery(spec.window))?;

    let filter_start = Instant::now();
    let mut fell_back = false;
    let filtered = match spec.index {
        IndexKind::Exact => None,
        kind => {
            let radius = spec.radius.expect("checked");
            let ids = match kind {
                IndexKind::Pivot => {
                    let index = indexes.pivot.ok_or(QueryError::IndexMissing(kind))?;
                    index.filter(&spec.query, spec.window, radius, oracle)
                }
                _ => {
                    let index = indexes.tree.ok_or(QueryError::IndexMissing(kind))?;
                    index.query(&spec.query, spec.window, radius, oracle)
                }
            };
            match ids {
                Ok(ids) => Some(ids),
                Err(IndexError::QueryOutsideIndexInterval { .. }) => {
                    fell_back = true;
                    None
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let candidates: Vec<&Trajectory> = match &filtered {
        None => store.iter().collect(),
        Some(ids) => {
            // Temporally disjoint trajectories score zero and are never evaluated.
            let mut picked = Vec::with_capacity(ids.len());
            for &id in ids {
                let t = store.get(id).ok_or(QueryError::NotInStore(id))?;
                if t.intersects(&spec.window) {
                    picked.push(t);
                }
            }
            picked
        }
    };
    let filter_time = filter_start.elapsed();

    let eval_start = Instant::now();
    let prepared = PreparedQuery::new(oracle, restricted)?;
    let window = spec.window;
    let score = |mut acc: TopK<S>, t: &&Trajectory| -> Result<TopK<S>, QueryError> {
        let similarity = match options.kernel {
            Kernel::Merge => {
                let eval = prepared.evaluate(t, window, acc.budget(options.bounding));
                acc.merge_steps += eval.merge_steps as u64;
                if !eval.is_complete() {
                    return Ok(acc);
                }
                eval.value
            }
            Kernel::Naive => naive_similarity(prepared.trajectory(), t, window, oracle)?,
        };
        acc.offer(Hit { id: t.id, similarity });
        Ok(acc)
    };
    let mut best = if options.parallel {
        candidates
            .par_iter()
            .try_fold(|| TopK::new(spec.k), score)
            .try_reduce(|| TopK::new(spec.k), |a, b| Ok(a.merge(b)))?
    } else {
        candidates.iter().try_fold(TopK::new(spec.k), score)?
    };
    let mut candidate_count = candidates.len();
    // Fewer than k positive scores: an exhaustive scan would fill the rest
    // with the lowest ids among the zero scores, some of them outside the
    // candidate set.
    let positive = best.heap.iter().filter(|r| r.0.similarity > S::zero()).count();
    if filtered.is_some() && positive < spec.k {
        let taken: HashSet<TrajectoryId> = candidates.iter().map(|t| t.id).collect();
        let mut rest: Vec<TrajectoryId> = store.iter().map(|t| t.id).filter(|id| !taken.contains(id)).collect();
        rest.sort_unstable();
        rest.truncate(spec.k - positive);
        candidate_count += rest.len();
        for id in rest {
            best.offer(Hit { id, similarity: S::zero() });
        }
    }
    let merge_steps = best.merge_steps;
    Ok(TopKResult {
        hits: best.into_sorted(),
        candidate_count,
        filter_time,
        eval_time: eval_start.elapsed(),
        merge_steps,
        fell_back,
    })
}
