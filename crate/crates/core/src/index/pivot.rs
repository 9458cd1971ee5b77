//! Pivot-based spatial filter.
//!
//! `h` stationary pivot trajectories sit at the most visited vertices for the
//! whole indexed time span `t`. Because every pivot exists throughout `t`, the
//! distance over `t` obeys the triangle inequality through it, so
//! `|Dist(Q,P,t) - Dist(T,P,t)| <= Dist(Q,T,t)` and trajectories whose stored
//! pivot distances differ from the query's by more than a radius `r` can be
//! skipped.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use super::codec::{Reader, Writer};
use super::IndexError;
use crate::metric::{merge_kernel, DistanceOracle, SimilarityBudget};
use crate::model::{validate, Interval, Step, Trajectory, TrajectoryId, VertexId};
use crate::Scalar;

const MAGIC: &[u8; 8] = b"TRJPIVOT";
const VERSION: u32 = 1;

/// The `h` most visited vertices; every step of every trajectory counts as one
/// visit, ties go to the smaller vertex id.
pub fn select_pivots<'a>(trajectories: impl IntoIterator<Item = &'a Trajectory>, h: usize) -> Vec<VertexId> {
    let mut counts: HashMap<VertexId, u64> = HashMap::new();
    for t in trajectories {
        for v in t.vertices() {
            *counts.entry(v).or_default() += 1;
        }
    }
    let mut ranked: Vec<(VertexId, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(h).map(|(v, _)| v).collect()
}

/// Pivot distances of one set of trajectories: row `k` holds
/// `Dist(roster[k], P_i, t)` for every pivot `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotTable<S = f64> {
    roster: Vec<TrajectoryId>,
    matrix: Vec<S>,
    width: usize,
}

impl<S: Scalar> PivotTable<S> {
    pub fn roster(&self) -> &[TrajectoryId] {
        &self.roster
    }

    pub fn row(&self, k: usize) -> &[S] {
        &self.matrix[k * self.width..(k + 1) * self.width]
    }

    pub fn matrix(&self) -> &[S] {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.roster.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roster.is_empty()
    }

    pub fn entry_count(&self) -> usize {
        self.matrix.len()
    }

    /// Whether row `k` is within `radius` of `query` on every pivot.
    #[inline]
    pub fn admits(&self, k: usize, query: &[S], radius: S) -> bool {
        self.row(k).iter().zip(query).all(|(&d, &q)| (q - d).abs() <= radius)
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        w.u64(self.roster.len() as u64);
        for &id in &self.roster {
            w.u64(id);
        }
        for &d in &self.matrix {
            w.f64(d.to_f64_lossless());
        }
    }

    pub(crate) fn read(r: &mut Reader<'_>, width: usize) -> Result<Self, IndexError> {
        let n = r.len(8)?;
        let roster = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
        let matrix = (0..n * width).map(|_| r.f64().map(S::from_f64_lossy)).collect::<Result<Vec<_>, _>>()?;
        Ok(PivotTable { roster, matrix, width })
    }
}

/// `e^{-d(p_i, ·)}` for every pivot, shared by index construction and queries.
pub(crate) struct PivotKernel<S> {
    pivots: Vec<[Step; 1]>,
    affinity: Vec<Vec<S>>,
    interval: Interval,
}

impl<S: Scalar> PivotKernel<S> {
    pub fn new(oracle: &DistanceOracle<S>, pivots: &[VertexId], interval: Interval) -> Result<Self, IndexError> {
        let affinity = pivots
            .iter()
            .map(|&p| Ok(oracle.row(p)?.iter().map(|&d| (-d).exp()).collect()))
            .collect::<Result<Vec<Vec<S>>, IndexError>>()?;
        let pivots = pivots.iter().map(|&vertex| [Step { vertex, interval }]).collect();
        Ok(PivotKernel { pivots, affinity, interval })
    }

    /// `Dist(steps, P_i, t)` for every pivot.
    pub fn distances(&self, steps: &[Step]) -> Vec<S> {
        self.pivots
            .iter()
            .zip(&self.affinity)
            .map(|(pivot, row)| {
                let weight = |_: usize, _: VertexId, v: VertexId| row[v as usize];
                let eval = merge_kernel(pivot, steps, self.interval, &weight, SimilarityBudget::disabled());
                S::one() - eval.value
            })
            .collect()
    }

    pub fn table(&self, trajectories: &[&Trajectory]) -> PivotTable<S> {
        let rows: Vec<Vec<S>> = trajectories.par_iter().map(|t| self.distances(&t.steps)).collect();
        PivotTable {
            roster: trajectories.iter().map(|t| t.id).collect(),
            matrix: rows.into_iter().flatten().collect(),
            width: self.pivots.len(),
        }
    }
}

pub(crate) fn check_trajectories<'a, S: Scalar>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    oracle: &DistanceOracle<S>,
) -> Result<(), IndexError> {
    for t in trajectories {
        let violations = validate(t, oracle.graph());
        if !violations.is_empty() {
            return Err(IndexError::InvalidTrajectory { id: t.id, violations });
        }
    }
    Ok(())
}

/// Global pivot filter over a trajectory set.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotIndex<S = f64> {
    pivots: Vec<VertexId>,
    interval: Interval,
    table: PivotTable<S>,
}

impl<S: Scalar> PivotIndex<S> {
    /// Selects `h` pivots and fills the distance matrix.
    pub fn build<'a>(
        trajectories: impl IntoIterator<Item = &'a Trajectory>,
        oracle: &DistanceOracle<S>,
        h: usize,
    ) -> Result<Self, IndexError> {
        if h == 0 {
            return Err(IndexError::InvalidParameter("h must be at least 1".into()));
        }
        let trajectories: Vec<&Trajectory> = trajectories.into_iter().collect();
        if trajectories.is_empty() {
            return Err(IndexError::EmptyStore);
        }
        check_trajectories(trajectories.iter().copied(), oracle)?;
        let pivots = select_pivots(trajectories.iter().copied(), h);
        let interval = trajectories.iter().fold(Interval::EMPTY, |acc, t| acc.hull(&t.lifespan()));
        Self::build_with(&trajectories, oracle, pivots, interval)
    }

    /// Builds over `trajectories` with fixed pivots and interval.
    pub fn build_with(
        trajectories: &[&Trajectory],
        oracle: &DistanceOracle<S>,
        pivots: Vec<VertexId>,
        interval: Interval,
    ) -> Result<Self, IndexError> {
        if interval.is_empty() {
            return Err(IndexError::EmptyStore);
        }
        let kernel = PivotKernel::new(oracle, &pivots, interval)?;
        let table = kernel.table(trajectories);
        Ok(PivotIndex { pivots, interval, table })
    }

    pub fn pivots(&self) -> &[VertexId] {
        &self.pivots
    }

    /// The indexed time span `t`.
    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn table(&self) -> &PivotTable<S> {
        &self.table
    }

    pub fn roster(&self) -> &[TrajectoryId] {
        self.table.roster()
    }

    /// Stored distances, `|roster| · h`.
    pub fn entry_count(&self) -> usize {
        self.table.entry_count()
    }

    /// `Dist(Q[s], P_i, t)` for every pivot; fails if `window ⊄ t`.
    pub fn query_distances(
        &self,
        query: &Trajectory,
        window: Interval,
        oracle: &DistanceOracle<S>,
    ) -> Result<Vec<S>, IndexError> {
        query_pivot_distances(&self.pivots, self.interval, query, window, oracle)
    }

    /// Ids of trajectories whose pivot distances are all within `radius` of the query's.
    pub fn filter(
        &self,
        query: &Trajectory,
        window: Interval,
        radius: S,
        oracle: &DistanceOracle<S>,
    ) -> Result<Vec<TrajectoryId>, IndexError> {
        let q = self.query_distances(query, window, oracle)?;
        Ok(self.filter_with(&q, radius))
    }

    pub fn filter_with(&self, query_distances: &[S], radius: S) -> Vec<TrajectoryId> {
        (0..self.table.len())
            .filter(|&k| self.table.admits(k, query_distances, radius))
            .map(|k| self.table.roster[k])
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.u32(self.pivots.len() as u32);
        w.i64(self.interval.start());
        w.i64(self.interval.end());
        for &p in &self.pivots {
            w.u32(p);
        }
        self.table.write(&mut w);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader::open(bytes, MAGIC, VERSION)?;
        let h = r.u32()? as usize;
        let interval =
            Interval::new(r.i64()?, r.i64()?).ok_or_else(|| IndexError::Format("empty index interval".into()))?;
        let pivots = (0..h).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let table = PivotTable::read(&mut r, h)?;
        r.finish()?;
        Ok(PivotIndex { pivots, interval, table })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

pub(crate) fn query_pivot_distances<S: Scalar>(
    pivots: &[VertexId],
    interval: Interval,
    query: &Trajectory,
    window: Interval,
    oracle: &DistanceOracle<S>,
) -> Result<Vec<S>, IndexError> {
    if window.is_empty() {
        return Err(crate::metric::MetricError::EmptyQueryInterval.into());
    }
    if !window.is_subset_of(&interval) {
        return Err(IndexError::QueryOutsideIndexInterval { query: window, index: interval });
    }
    let restricted = query.restrict(&window);
    let steps = restricted.as_ref().map_or(&[][..], |t| &t.steps[..]);
    // Per-step exponentials only: O(h·|Q|) rather than whole affinity rows.
    let rows = pivots.iter().map(|&p| oracle.row(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(rows
        .iter()
        .zip(pivots)
        .map(|(row, &vertex)| {
            let pivot = [Step { vertex, interval }];
            let weight = |_: usize, _: VertexId, v: VertexId| (-row[v as usize]).exp();
            S::one() - merge_kernel(&pivot, steps, interval, &weight, SimilarityBudget::disabled()).value
        })
        .collect())
}
