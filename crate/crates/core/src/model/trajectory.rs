use std::fmt;

use serde::{Deserialize, Serialize};

use super::graph::{Graph, VertexId};
use super::interval::{Interval, Time};
use crate::Scalar;

pub type TrajectoryId = u64;

/// One visit: the walk stays at `vertex` during `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub vertex: VertexId,
    pub interval: Interval,
}

impl Step {
    pub fn new(vertex: VertexId, start: Time, end: Time) -> Self {
        Step { vertex, interval: Interval::raw(start, end) }
    }
}

/// A walk through the graph with a dwell interval at every visited vertex.
///
/// Well-formed trajectories are non-empty, their intervals chain end to start
/// and consecutive vertices differ. The type itself does not enforce this so
/// that loaders can report every violation at once; see [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: TrajectoryId,
    pub steps: Vec<Step>,
}

/// A violated trajectory invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoSteps,
    EmptyInterval {
        step: usize,
        interval: Interval,
    },
    /// Step `step` does not start where step `step - 1` ended.
    Gap {
        step: usize,
        expected: Time,
        found: Time,
    },
    RepeatedVertex {
        step: usize,
        vertex: VertexId,
    },
    UnknownVertex {
        step: usize,
        vertex: VertexId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSteps => write!(f, "trajectory has no steps"),
            Violation::EmptyInterval { step, interval } => {
                write!(f, "step {step}: interval {:?} is empty", (interval.start(), interval.end()))
            }
            Violation::Gap { step, expected, found } => {
                write!(f, "step {step}: gap at t={expected} (next step starts at {found})")
            }
            Violation::RepeatedVertex { step, vertex } => {
                write!(f, "step {step}: repeated vertex {vertex}")
            }
            Violation::UnknownVertex { step, vertex } => {
                write!(f, "step {step}: vertex {vertex} is not in the graph")
            }
        }
    }
}

impl Trajectory {
    pub fn new(id: TrajectoryId, steps: Vec<Step>) -> Self {
        Trajectory { id, steps }
    }

    /// A trajectory that stays at `vertex` for the whole of `interval`.
    pub fn stationary(id: TrajectoryId, vertex: VertexId, interval: Interval) -> Self {
        Trajectory { id, steps: vec![Step { vertex, interval }] }
    }

    /// Builds a trajectory from a vertex sequence and the chained boundary
    /// times `times[0] < times[1] < ... < times[len]`.
    pub fn from_boundaries(id: TrajectoryId, vertices: &[VertexId], times: &[Time]) -> Self {
        assert_eq!(times.len(), vertices.len() + 1, "need one more boundary than vertices");
        let steps = vertices.iter().zip(times.windows(2)).map(|(&v, w)| Step::new(v, w[0], w[1])).collect();
        Trajectory { id, steps }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn start(&self) -> Time {
        self.steps.first().map_or(0, |s| s.interval.start())
    }

    pub fn end(&self) -> Time {
        self.steps.last().map_or(0, |s| s.interval.end())
    }

    /// `[start, end)` of the whole walk.
    pub fn lifespan(&self) -> Interval {
        Interval::clamped(self.start(), self.end())
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.steps.iter().map(|s| s.vertex)
    }

    pub fn intersects(&self, window: &Interval) -> bool {
        self.steps.iter().any(|s| s.interval.intersects(window))
    }

    /// The time-restricted trajectory: steps outside `window` are dropped and
    /// the first and last survivors are clipped. `None` if nothing overlaps.
    pub fn restrict(&self, window: &Interval) -> Option<Trajectory> {
        if window.is_empty() {
            return None;
        }
        let steps: Vec<Step> = self
            .steps
            .iter()
            .filter_map(|s| {
                let clipped = s.interval.intersect(window);
                (!clipped.is_empty()).then_some(Step { vertex: s.vertex, interval: clipped })
            })
            .collect();
        (!steps.is_empty()).then_some(Trajectory { id: self.id, steps })
    }

    /// Structural invariants only (no graph needed).
    pub fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.steps.is_empty() {
            out.push(Violation::NoSteps);
            return out;
        }
        for (i, s) in self.steps.iter().enumerate() {
            if s.interval.is_empty() {
                out.push(Violation::EmptyInterval { step: i, interval: s.interval });
            }
            if i > 0 {
                let prev = &self.steps[i - 1];
                if prev.interval.end() != s.interval.start() {
                    out.push(Violation::Gap { step: i, expected: prev.interval.end(), found: s.interval.start() });
                }
                if prev.vertex == s.vertex {
                    out.push(Violation::RepeatedVertex { step: i, vertex: s.vertex });
                }
            }
        }
        out
    }
}

/// Every invariant `trajectory` violates with respect to `graph`; empty when valid.
pub fn validate<S: Scalar>(trajectory: &Trajectory, graph: &Graph<S>) -> Vec<Violation> {
    let mut out = trajectory.structural_violations();
    for (i, s) in trajectory.steps.iter().enumerate() {
        if !graph.contains(s.vertex) {
            out.push(Violation::UnknownVertex { step: i, vertex: s.vertex });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(steps: &[(VertexId, Time, Time)]) -> Trajectory {
        Trajectory::new(1, steps.iter().map(|&(v, a, b)| Step::new(v, a, b)).collect())
    }

    #[test]
    fn restrict_clips_both_ends() {
        let traj = t(&[(1, 0, 2), (2, 2, 5)]);
        let r = traj.restrict(&Interval::new(1, 3).unwrap()).unwrap();
        assert_eq!(r, t(&[(1, 1, 2), (2, 2, 3)]));
    }

    #[test]
    fn restrict_identity_and_disjoint() {
        let traj = t(&[(1, 0, 2)]);
        assert_eq!(traj.restrict(&Interval::new(0, 2).unwrap()).unwrap(), traj);
        assert!(traj.restrict(&Interval::new(5, 8).unwrap()).is_none());
        assert!(traj.restrict(&Interval::new(2, 8).unwrap()).is_none());
    }

    #[test]
    fn validate_reports_every_violation() {
        let g = Graph::<f64>::chain(3);
        assert!(validate(&t(&[(0, 0, 2), (1, 2, 3)]), &g).is_empty());
        assert_eq!(validate(&t(&[(1, 0, 2), (1, 2, 3)]), &g), vec![Violation::RepeatedVertex { step: 1, vertex: 1 }]);
        assert_eq!(validate(&t(&[(1, 0, 2), (2, 3, 4)]), &g), vec![Violation::Gap { step: 1, expected: 2, found: 3 }]);
        let bad = validate(&t(&[(0, 0, 2), (0, 3, 3), (7, 3, 4)]), &g);
        assert_eq!(bad.len(), 4, "{bad:?}");
        assert_eq!(validate(&Trajectory::new(0, vec![]), &g), vec![Violation::NoSteps]);
    }

    #[test]
    fn gap_message_names_the_time() {
        let msg = Violation::Gap { step: 1, expected: 2, found: 3 }.to_string();
        assert!(msg.contains("gap at t=2"), "{msg}");
    }

    #[test]
    fn lifespan_matches_step_union() {
        let traj = t(&[(0, 3, 4), (1, 4, 9), (2, 9, 10)]);
        assert_eq!(traj.lifespan(), Interval::new(3, 10).unwrap());
        let total: i64 = traj.steps.iter().map(|s| s.interval.len()).sum();
        assert_eq!(total, traj.lifespan().len());
    }
}
