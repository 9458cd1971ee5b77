use std::fmt;

use serde::{Deserialize, Serialize};

/// Discrete time unit.
pub type Time = i64;

/// Half-open integer time range `[start, end)`.
///
/// Non-empty intervals always satisfy `start < end`; the empty interval is the
/// single canonical value [`Interval::EMPTY`]. The length is the number of unit
/// steps covered, so adjacent intervals `[a, b)` and `[b, c)` share nothing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    start: Time,
    end: Time,
}

impl Interval {
    pub const EMPTY: Interval = Interval { start: 0, end: 0 };

    /// Returns `None` unless `start < end`.
    pub fn new(start: Time, end: Time) -> Option<Self> {
        (start < end).then_some(Interval { start, end })
    }

    /// `[start, end)` if non-empty, otherwise [`Interval::EMPTY`].
    pub fn clamped(start: Time, end: Time) -> Self {
        Self::new(start, end).unwrap_or(Self::EMPTY)
    }

    /// Builds `[start, end)` without normalizing; callers guarantee `start < end`
    /// or deliberately want a malformed value (e.g. to exercise validation).
    pub fn raw(start: Time, end: Time) -> Self {
        Interval { start, end }
    }

    #[inline]
    pub fn start(&self) -> Time {
        self.start
    }

    #[inline]
    pub fn end(&self) -> Time {
        self.end
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Number of unit steps; zero for the empty interval.
    #[inline]
    pub fn len(&self) -> i64 {
        if self.is_empty() {
            0
        } else {
            self.end - self.start
        }
    }

    #[inline]
    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::clamped(self.start.max(other.start), self.end.min(other.end))
    }

    #[inline]
    pub fn intersects(&self, other: &Interval) -> bool {
        !self.intersect(other).is_empty()
    }

    /// Length of `self ∩ other` without materializing it.
    #[inline]
    pub fn overlap(&self, other: &Interval) -> i64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0)
    }

    /// `true` if `self ⊆ other`. The empty interval is contained in everything.
    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.is_empty() || (other.start <= self.start && self.end <= other.end)
    }

    /// Smallest interval covering both; empty operands are ignored.
    pub fn hull(&self, other: &Interval) -> Interval {
        match (self.is_empty(), other.is_empty()) {
            (true, _) => *other,
            (_, true) => *self,
            _ => Interval::raw(self.start.min(other.start), self.end.max(other.end)),
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "[{}, {})", self.start, self.end)
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
