//! Interval tree over trajectory lifespans with a pivot filter at every node.
//!
//! A node splits its set at the lower median `m` of the end times: lifespans
//! ending at or before `m` go left, those starting at or after `m` go right
//! and the rest stay at the node. Pivots are chosen once for the whole set and
//! every node keeps the distance rows of its own roster only.

use std::path::Path;

use super::codec::{Reader, Writer};
use super::pivot::{check_trajectories, query_pivot_distances, select_pivots, PivotKernel, PivotTable};
use super::IndexError;
use crate::metric::DistanceOracle;
use crate::model::{Interval, Time, Trajectory, TrajectoryId, VertexId};
use crate::Scalar;

const MAGIC: &[u8; 8] = b"TRJTREE\0";
const VERSION: u32 = 1;

pub const DEFAULT_LEAF_MIN: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<S = f64> {
    median: Option<Time>,
    lifespans: Vec<Interval>,
    table: PivotTable<S>,
    left: Option<Box<TreeNode<S>>>,
    right: Option<Box<TreeNode<S>>>,
}

impl<S: Scalar> TreeNode<S> {
    /// Split point; `None` at leaves.
    pub fn median(&self) -> Option<Time> {
        self.median
    }

    pub fn roster(&self) -> &[TrajectoryId] {
        self.table.roster()
    }

    pub fn lifespans(&self) -> &[Interval] {
        &self.lifespans
    }

    pub fn table(&self) -> &PivotTable<S> {
        &self.table
    }

    pub fn left(&self) -> Option<&TreeNode<S>> {
        self.left.as_deref()
    }

    pub fn right(&self) -> Option<&TreeNode<S>> {
        self.right.as_deref()
    }

    fn children(&self) -> impl Iterator<Item = &TreeNode<S>> {
        self.left().into_iter().chain(self.right())
    }

    fn write(&self, w: &mut Writer) {
        let flags = u8::from(self.median.is_some())
            | (u8::from(self.left.is_some()) << 1)
            | (u8::from(self.right.is_some()) << 2);
        w.u8(flags);
        w.i64(self.median.unwrap_or(0));
        self.table.write(w);
        for l in &self.lifespans {
            w.i64(l.start());
            w.i64(l.end());
        }
        for child in self.children() {
            child.write(w);
        }
    }

    fn read(r: &mut Reader<'_>, width: usize, depth: usize) -> Result<Self, IndexError> {
        if depth > 4096 {
            return Err(IndexError::Format("tree too deep".into()));
        }
        let flags = r.u8()?;
        if flags >> 3 != 0 {
            return Err(IndexError::Format(format!("bad node flags {flags:#x}")));
        }
        let median = r.i64()?;
        let median = (flags & 1 != 0).then_some(median);
        let table = PivotTable::read(r, width)?;
        let lifespans =
            (0..table.len()).map(|_| Ok(Interval::raw(r.i64()?, r.i64()?))).collect::<Result<Vec<_>, IndexError>>()?;
        let left = if flags & 2 != 0 { Some(Box::new(Self::read(r, width, depth + 1)?)) } else { None };
        let right = if flags & 4 != 0 { Some(Box::new(Self::read(r, width, depth + 1)?)) } else { None };
        Ok(TreeNode { median, lifespans, table, left, right })
    }
}

/// Shape summary of a built tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStats {
    pub node_count: usize,
    pub depth: usize,
    /// Roster sizes in pre-order.
    pub roster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeIndex<S = f64> {
    pivots: Vec<VertexId>,
    interval: Interval,
    leaf_min: usize,
    root: TreeNode<S>,
}

/// Lower median of the end times.
fn lower_median(ends: &mut [Time]) -> Time {
    let mid = (ends.len() - 1) / 2;
    *ends.select_nth_unstable(mid).1
}

struct Builder<'a, S: Scalar> {
    kernel: PivotKernel<S>,
    leaf_min: usize,
    trajectories: &'a [&'a Trajectory],
}

impl<S: Scalar> Builder<'_, S> {
    fn node(&self, members: Vec<usize>, median: Option<Time>) -> TreeNode<S> {
        let stored: Vec<&Trajectory> = members.iter().map(|&i| self.trajectories[i]).collect();
        TreeNode {
            median,
            lifespans: stored.iter().map(|t| t.lifespan()).collect(),
            table: self.kernel.table(&stored),
            left: None,
            right: None,
        }
    }

    fn build(&self, members: Vec<usize>, one_sided_before: bool) -> TreeNode<S> {
        if members.len() <= self.leaf_min {
            return self.node(members, None);
        }
        let mut ends: Vec<Time> = members.iter().map(|&i| self.trajectories[i].end()).collect();
        let m = lower_median(&mut ends);
        let (mut left, mut right, mut here) = (Vec::new(), Vec::new(), Vec::new());
        for i in members {
            let t = self.trajectories[i];
            if t.end() <= m {
                left.push(i);
            } else if t.start() >= m {
                right.push(i);
            } else {
                here.push(i);
            }
        }
        let total = left.len() + right.len() + here.len();
        let no_progress = [&left, &right, &here].iter().any(|part| part.len() == total);
        let one_sided = left.is_empty() || right.is_empty();
        if no_progress || (one_sided && one_sided_before) {
            let mut all = here;
            all.extend(left);
            all.extend(right);
            all.sort_unstable();
            return self.node(all, None);
        }
        let (mut node, (l, r)) = rayon::join(
            || self.node(here, Some(m)),
            || {
                rayon::join(
                    || (!left.is_empty()).then(|| Box::new(self.build(left, one_sided))),
                    || (!right.is_empty()).then(|| Box::new(self.build(right, one_sided))),
                )
            },
        );
        node.left = l;
        node.right = r;
        node
    }
}

impl<S: Scalar> TreeIndex<S> {
    pub fn build<'a>(
        trajectories: impl IntoIterator<Item = &'a Trajectory>,
        oracle: &DistanceOracle<S>,
        h: usize,
        leaf_min: usize,
    ) -> Result<Self, IndexError> {
        if h == 0 {
            return Err(IndexError::InvalidParameter("h must be at least 1".into()));
        }
        if leaf_min == 0 {
            return Err(IndexError::InvalidParameter("leaf_min must be at least 1".into()));
        }
        let trajectories: Vec<&Trajectory> = trajectories.into_iter().collect();
        if trajectories.is_empty() {
            return Err(IndexError::EmptyStore);
        }
        check_trajectories(trajectories.iter().copied(), oracle)?;
        let pivots = select_pivots(trajectories.iter().copied(), h);
        let interval = trajectories.iter().fold(Interval::EMPTY, |acc, t| acc.hull(&t.lifespan()));
        let builder =
            Builder { kernel: PivotKernel::new(oracle, &pivots, interval)?, leaf_min, trajectories: &trajectories };
        let root = builder.build((0..trajectories.len()).collect(), false);
        Ok(TreeIndex { pivots, interval, leaf_min, root })
    }

    pub fn root(&self) -> &TreeNode<S> {
        &self.root
    }

    pub fn pivots(&self) -> &[VertexId] {
        &self.pivots
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn leaf_min(&self) -> usize {
        self.leaf_min
    }

    fn preorder(&self) -> Vec<(usize, &TreeNode<S>)> {
        let mut out = Vec::new();
        let mut stack = vec![(1, &self.root)];
        while let Some((depth, node)) = stack.pop() {
            out.push((depth, node));
            stack.extend(node.right().map(|n| (depth + 1, n)));
            stack.extend(node.left().map(|n| (depth + 1, n)));
        }
        out
    }

    pub fn stats(&self) -> TreeStats {
        let nodes = self.preorder();
        TreeStats {
            node_count: nodes.len(),
            depth: nodes.iter().map(|&(d, _)| d).max().unwrap_or(0),
            roster_sizes: nodes.iter().map(|(_, n)| n.table.len()).collect(),
        }
    }

    /// Number of indexed trajectories.
    pub fn len(&self) -> usize {
        self.preorder().iter().map(|(_, n)| n.table.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stored distances, `Σ |roster| · h` over all nodes.
    pub fn entry_count(&self) -> usize {
        self.preorder().iter().map(|(_, n)| n.table.entry_count()).sum()
    }

    /// Trajectories whose lifespan intersects `window` and whose pivot
    /// distances are all within `radius` of the query's.
    pub fn query(
        &self,
        query: &Trajectory,
        window: Interval,
        radius: S,
        oracle: &DistanceOracle<S>,
    ) -> Result<Vec<TrajectoryId>, IndexError> {
        let q = query_pivot_distances(&self.pivots, self.interval, query, window, oracle)?;
        Ok(self.query_with(&q, window, radius))
    }

    pub fn query_with(&self, query_distances: &[S], window: Interval, radius: S) -> Vec<TrajectoryId> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            for (k, lifespan) in node.lifespans.iter().enumerate() {
                if lifespan.intersects(&window) && node.table.admits(k, query_distances, radius) {
                    out.push(node.table.roster()[k]);
                }
            }
            if let Some(m) = node.median {
                if window.end() > m {
                    stack.extend(node.right());
                }
                if window.start() < m {
                    stack.extend(node.left());
                }
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.u32(self.pivots.len() as u32);
        w.i64(self.interval.start());
        w.i64(self.interval.end());
        w.u64(self.leaf_min as u64);
        for &p in &self.pivots {
            w.u32(p);
        }
        self.root.write(&mut w);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader::open(bytes, MAGIC, VERSION)?;
        let h = r.u32()? as usize;
        let interval =
            Interval::new(r.i64()?, r.i64()?).ok_or_else(|| IndexError::Format("empty index interval".into()))?;
        let leaf_min = r.u64()? as usize;
        let pivots = (0..h).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let root = TreeNode::read(&mut r, h, 0)?;
        r.finish()?;
        Ok(TreeIndex { pivots, interval, leaf_min, root })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
