use std::collections::HashMap;

use super::interval::Interval;
use super::trajectory::{Trajectory, TrajectoryId};

/// An ordered collection of trajectories with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryStore {
    trajectories: Vec<Trajectory>,
    positions: HashMap<TrajectoryId, usize>,
}

impl TrajectoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails with the offending id if `trajectories` contains a duplicate.
    pub fn from_vec(trajectories: Vec<Trajectory>) -> Result<Self, TrajectoryId> {
        let mut store = TrajectoryStore {
            positions: HashMap::with_capacity(trajectories.len()),
            trajectories: Vec::with_capacity(trajectories.len()),
        };
        for t in trajectories {
            store.push(t)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, trajectory: Trajectory) -> Result<(), TrajectoryId> {
        if self.positions.contains_key(&trajectory.id) {
            return Err(trajectory.id);
        }
        self.positions.insert(trajectory.id, self.trajectories.len());
        self.trajectories.push(trajectory);
        Ok(())
    }

    pub fn get(&self, id: TrajectoryId) -> Option<&Trajectory> {
        self.positions.get(&id).map(|&i| &self.trajectories[i])
    }

    pub fn position(&self, id: TrajectoryId) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn as_slice(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trajectory> {
        self.trajectories.iter()
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// `[earliest start, latest end)` over the store; empty for an empty store.
    pub fn time_span(&self) -> Interval {
        self.trajectories.iter().fold(Interval::EMPTY, |acc, t| acc.hull(&t.lifespan()))
    }

    pub fn into_vec(self) -> Vec<Trajectory> {
        self.trajectories
    }
}

impl<'a> IntoIterator for &'a TrajectoryStore {
    type Item = &'a Trajectory;
    type IntoIter = std::slice::Iter<'a, Trajectory>;

    fn into_iter(self) -> Self::IntoIter {
        self.trajectories.iter()
    }
}
