//! Exact interval-set arithmetic on integer ticks.
//!
//! Every temporal measure of a multilayer stream graph reduces to unions,
//! intersections and lengths of closed intervals. Instants are integer tick
//! counts so that all sums stay exact; a [`Resolution`] records how long one
//! tick is.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("tick resolution mismatch: {left} ns vs {right} ns")]
    ResolutionMismatch { left: u64, right: u64 },
    #[error("interval start {start} is after its end {end}")]
    Inverted { start: i64, end: i64 },
}

/// Length of one tick, in nanoseconds. Defaults to one second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution(pub u64);

impl Resolution {
    pub const SECOND: Resolution = Resolution(1_000_000_000);

    pub fn nanos(self) -> u64 {
        self.0
    }
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution::SECOND
    }
}

/// A point in time, counted in ticks of the graph's resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instant(pub i64);

impl Instant {
    pub const fn ticks(self) -> i64 {
        self.0
    }

    pub fn as_point_set(self, resolution: Resolution) -> TimeSet {
        TimeSet::from_intervals_at(resolution, [Interval { start: self, end: self }])
    }
}

impl Add<i64> for Instant {
    type Output = Instant;
    fn add(self, rhs: i64) -> Instant {
        Instant(self.0 + rhs)
    }
}

impl Sub<i64> for Instant {
    type Output = Instant;
    fn sub(self, rhs: i64) -> Instant {
        Instant(self.0 - rhs)
    }
}

impl Sub for Instant {
    type Output = i64;
    fn sub(self, rhs: Instant) -> i64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Closed interval `[start, end]`. `start == end` is an instantaneous interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: Instant,
    pub end: Instant,
}

impl Interval {
    pub fn new(start: i64, end: i64) -> Result<Self, TimeError> {
        if start > end {
            return Err(TimeError::Inverted { start, end });
        }
        Ok(Interval {
            start: Instant(start),
            end: Instant(end),
        })
    }

    /// Panics if `start > end`.
    pub fn closed(start: i64, end: i64) -> Self {
        Interval::new(start, end).expect("interval start after end")
    }

    pub fn point(t: i64) -> Self {
        Interval::closed(t, t)
    }

    pub fn length(&self) -> i64 {
        self.end - self.start
    }

    pub fn is_instantaneous(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, t: Instant) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then_some(Interval { start, end })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// A normalized union of closed intervals: sorted, pairwise disjoint and
/// non-abutting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TimeSet {
    resolution: Resolution,
    intervals: Vec<Interval>,
}

impl TimeSet {
    pub fn empty() -> Self {
        TimeSet::default()
    }

    pub fn with_resolution(resolution: Resolution) -> Self {
        TimeSet {
            resolution,
            intervals: Vec::new(),
        }
    }

    pub fn from_interval(interval: Interval) -> Self {
        TimeSet {
            resolution: Resolution::default(),
            intervals: vec![interval],
        }
    }

    /// Builds a set from arbitrary intervals, merging overlapping or abutting ones.
    pub fn from_intervals<I: IntoIterator<Item = Interval>>(intervals: I) -> Self {
        TimeSet::from_intervals_at(Resolution::default(), intervals)
    }

    pub fn from_intervals_at<I: IntoIterator<Item = Interval>>(resolution: Resolution, intervals: I) -> Self {
        let mut intervals: Vec<Interval> = intervals.into_iter().collect();
        normalize_in_place(&mut intervals);
        TimeSet { resolution, intervals }
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn first(&self) -> Option<Instant> {
        self.intervals.first().map(|iv| iv.start)
    }

    pub fn last(&self) -> Option<Instant> {
        self.intervals.last().map(|iv| iv.end)
    }

    /// Re-normalizes the set. Idempotent on already normalized sets.
    pub fn normalize(&self) -> TimeSet {
        TimeSet::from_intervals_at(self.resolution, self.intervals.iter().copied())
    }

    /// Total length in ticks; instantaneous intervals contribute zero.
    pub fn measure(&self) -> i64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    /// Total length in units of the resolution (seconds for the default).
    pub fn measure_seconds(&self) -> f64 {
        self.measure() as f64 * self.resolution.0 as f64 * 1e-9
    }

    pub fn contains(&self, t: Instant) -> bool {
        // first interval whose end >= t
        let idx = self.intervals.partition_point(|iv| iv.end < t);
        self.intervals.get(idx).is_some_and(|iv| iv.start <= t)
    }

    pub fn contains_interval(&self, interval: &Interval) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.end < interval.start);
        self.intervals.get(idx).is_some_and(|iv| iv.contains_interval(interval))
    }

    /// True iff every instant of `other` belongs to `self`.
    pub fn is_superset_of(&self, other: &TimeSet) -> bool {
        other.intervals.iter().all(|iv| self.contains_interval(iv))
    }

    pub fn union(&self, other: &TimeSet) -> Result<TimeSet, TimeError> {
        self.check_resolution(other)?;
        Ok(self.union_same(other))
    }

    pub fn intersect(&self, other: &TimeSet) -> Result<TimeSet, TimeError> {
        self.check_resolution(other)?;
        Ok(self.intersect_same(other))
    }

    /// Instants of `self` not in `other`, as a normalized set of closed
    /// intervals. Boundary instants shared with `other` are kept, so the
    /// result is the closure of the set difference.
    pub fn difference(&self, other: &TimeSet) -> Result<TimeSet, TimeError> {
        self.check_resolution(other)?;
        let mut out = Vec::new();
        let mut j = 0;
        for iv in &self.intervals {
            let mut cursor = iv.start;
            let mut covered_to_end = false;
            while j < other.intervals.len() && other.intervals[j].end < iv.start {
                j += 1;
            }
            let mut k = j;
            while k < other.intervals.len() && other.intervals[k].start <= iv.end {
                let o = other.intervals[k];
                if o.start > cursor {
                    out.push(Interval {
                        start: cursor,
                        end: o.start,
                    });
                }
                if o.end >= iv.end {
                    covered_to_end = true;
                    break;
                }
                cursor = cursor.max(o.end);
                k += 1;
            }
            if !covered_to_end {
                out.push(Interval {
                    start: cursor,
                    end: iv.end,
                });
            }
        }
        Ok(TimeSet::from_intervals_at(self.resolution, out))
    }

    /// Length of `self ∩ other` without materializing the intersection.
    pub fn intersection_measure(&self, other: &TimeSet) -> i64 {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j, mut total) = (0, 0, 0i64);
        while i < a.len() && j < b.len() {
            let start = a[i].start.max(b[j].start);
            let end = a[i].end.min(b[j].end);
            if start < end {
                total += end - start;
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// True iff the two sets share at least one instant.
    pub fn intersects(&self, other: &TimeSet) -> bool {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i].start.max(b[j].start) <= a[i].end.min(b[j].end) {
                return true;
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        false
    }

    pub(crate) fn union_same(&self, other: &TimeSet) -> TimeSet {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return TimeSet {
                resolution: self.resolution,
                intervals: other.intervals.clone(),
            };
        }
        // both inputs are sorted: merge then coalesce in one pass
        let mut merged = Vec::with_capacity(self.intervals.len() + other.intervals.len());
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() || j < other.intervals.len() {
            let take_left = match (self.intervals.get(i), other.intervals.get(j)) {
                (Some(x), Some(y)) => x.start <= y.start,
                (Some(_), None) => true,
                _ => false,
            };
            let next = if take_left {
                i += 1;
                self.intervals[i - 1]
            } else {
                j += 1;
                other.intervals[j - 1]
            };
            push_coalescing(&mut merged, next);
        }
        TimeSet {
            resolution: self.resolution,
            intervals: merged,
        }
    }

    pub(crate) fn intersect_same(&self, other: &TimeSet) -> TimeSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if let Some(iv) = a[i].intersection(&b[j]) {
                out.push(iv);
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        TimeSet {
            resolution: self.resolution,
            intervals: out,
        }
    }

    /// Restriction of the set to a window.
    pub fn clip(&self, window: &Interval) -> TimeSet {
        let intervals = self.intervals.iter().filter_map(|iv| iv.intersection(window)).collect();
        TimeSet {
            resolution: self.resolution,
            intervals,
        }
    }

    fn check_resolution(&self, other: &TimeSet) -> Result<(), TimeError> {
        if self.resolution != other.resolution {
            return Err(TimeError::ResolutionMismatch {
                left: self.resolution.0,
                right: other.resolution.0,
            });
        }
        Ok(())
    }
}

impl fmt::Display for TimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{iv}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<Interval> for TimeSet {
    fn from_iter<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        TimeSet::from_intervals(iter)
    }
}

fn push_coalescing(out: &mut Vec<Interval>, next: Interval) {
    match out.last_mut() {
        Some(last) if next.start <= last.end => last.end = last.end.max(next.end),
        _ => out.push(next),
    }
}

fn normalize_in_place(intervals: &mut Vec<Interval>) {
    intervals.sort_unstable();
    let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
    for iv in intervals.drain(..) {
        push_coalescing(&mut out, iv);
    }
    *intervals = out;
}
