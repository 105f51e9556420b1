//! Matched pairs with their cost breakdown, and perfect matchings.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::instance::{Instance, RequestId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("request {0} is matched twice")]
    Duplicate(RequestId),
    #[error("request {0} is paired with itself")]
    SelfPair(RequestId),
    #[error("request {request} does not exist (instance has {len})")]
    UnknownRequest { request: RequestId, len: usize },
    #[error("request {0} is left unmatched")]
    Unmatched(RequestId),
    #[error("event {index} has seq {seq}, expected {expected}")]
    BadSeq { index: usize, seq: usize, expected: usize },
    #[error("event seq {seq} is matched at {time}, before the previous event")]
    TimeOrder { seq: usize, time: f64 },
    #[error("event seq {seq} matches request {request} before it arrives")]
    EarlyMatch { seq: usize, request: RequestId },
    #[error("event seq {seq} has an inconsistent cost breakdown")]
    CostMismatch { seq: usize },
}

/// One matched pair `(i, j)`, `i < j`, realised at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchEvent {
    /// 1-based creation order.
    pub seq: usize,
    pub i: RequestId,
    pub j: RequestId,
    pub time: f64,
    pub dist: f64,
    pub wait_i: f64,
    pub wait_j: f64,
    pub total: f64,
}

impl MatchEvent {
    /// Builds the event for matching `a` and `b` at `time`.
    pub fn new(instance: &Instance, seq: usize, a: RequestId, b: RequestId, time: f64) -> Self {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        let dist = instance.dist(i, j);
        let wait_i = time - instance.atime(i);
        let wait_j = time - instance.atime(j);
        Self {
            seq,
            i,
            j,
            time,
            dist,
            wait_i,
            wait_j,
            total: dist + wait_i + wait_j,
        }
    }

    pub fn other(&self, r: RequestId) -> RequestId {
        if r == self.i {
            self.j
        } else {
            self.i
        }
    }

    pub fn wait_of(&self, r: RequestId) -> f64 {
        if r == self.i {
            self.wait_i
        } else {
            self.wait_j
        }
    }
}

/// A perfect matching as an ordered list of events.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    events: Vec<MatchEvent>,
    /// request id -> index into `events`
    event_of: Vec<usize>,
}

#[derive(Serialize)]
struct PairRecord {
    i: RequestId,
    j: RequestId,
    time: f64,
    cost: f64,
}

#[derive(Serialize)]
struct MatchingRecord {
    pairs: Vec<PairRecord>,
    total: f64,
}

impl Matching {
    /// Wraps events in creation order, checking perfectness and the
    /// per-event invariants.
    pub fn new(instance: &Instance, events: Vec<MatchEvent>) -> Result<Self, MatchingError> {
        let n = instance.len();
        let mut event_of = vec![usize::MAX; n];
        let mut last_time = f64::NEG_INFINITY;
        for (index, e) in events.iter().enumerate() {
            if e.seq != index + 1 {
                return Err(MatchingError::BadSeq {
                    index,
                    seq: e.seq,
                    expected: index + 1,
                });
            }
            if e.i == e.j {
                return Err(MatchingError::SelfPair(e.i));
            }
            for r in [e.i, e.j] {
                if r >= n {
                    return Err(MatchingError::UnknownRequest { request: r, len: n });
                }
                if event_of[r] != usize::MAX {
                    return Err(MatchingError::Duplicate(r));
                }
                event_of[r] = index;
                if e.time < instance.atime(r) {
                    return Err(MatchingError::EarlyMatch { seq: e.seq, request: r });
                }
            }
            if e.time < last_time {
                return Err(MatchingError::TimeOrder {
                    seq: e.seq,
                    time: e.time,
                });
            }
            last_time = e.time;
            let total = e.dist + e.wait_i + e.wait_j;
            if e.wait_i < 0.0 || e.wait_j < 0.0 || (total - e.total).abs() > 1e-9 * total.max(1.0) {
                return Err(MatchingError::CostMismatch { seq: e.seq });
            }
        }
        if let Some(r) = event_of.iter().position(|&e| e == usize::MAX) {
            return Err(MatchingError::Unmatched(r));
        }
        Ok(Self { events, event_of })
    }

    /// Offline matching from unordered pairs: each pair is realised at the
    /// later of its two arrivals, and events are ordered by that time
    /// (ties by ids).
    pub fn at_later_arrival(instance: &Instance, pairs: &[(RequestId, RequestId)]) -> Result<Self, MatchingError> {
        let n = instance.len();
        for &(a, b) in pairs {
            for r in [a, b] {
                if r >= n {
                    return Err(MatchingError::UnknownRequest { request: r, len: n });
                }
            }
        }
        let mut keyed: Vec<(f64, RequestId, RequestId)> = pairs
            .iter()
            .map(|&(a, b)| {
                let (i, j) = (a.min(b), a.max(b));
                (instance.atime(i).max(instance.atime(j)), i, j)
            })
            .collect();
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let events = keyed
            .into_iter()
            .enumerate()
            .map(|(k, (t, i, j))| MatchEvent::new(instance, k + 1, i, j, t))
            .collect();
        Matching::new(instance, events)
    }

    pub fn events(&self) -> &[MatchEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event_for(&self, r: RequestId) -> &MatchEvent {
        &self.events[self.event_of[r]]
    }

    /// Index into [`Matching::events`] of the event covering `r`.
    pub fn event_index(&self, r: RequestId) -> usize {
        self.event_of[r]
    }

    pub fn partner(&self, r: RequestId) -> RequestId {
        self.event_for(r).other(r)
    }

    /// Number of requests covered.
    pub fn request_count(&self) -> usize {
        self.event_of.len()
    }

    pub fn total(&self) -> f64 {
        self.events.iter().map(|e| e.total).sum()
    }

    /// The set of pairs `(i, j)`, `i < j`, ignoring times.
    pub fn pair_set(&self) -> BTreeSet<(RequestId, RequestId)> {
        self.events.iter().map(|e| (e.i, e.j)).collect()
    }

    /// Cost of this pairing if every pair were matched at its later
    /// arrival.
    pub fn space_time_cost(&self, instance: &Instance) -> f64 {
        self.events.iter().map(|e| instance.space_time_cost(e.i, e.j)).sum()
    }

    /// `{"pairs": [{"i", "j", "time", "cost"}, ...], "total": ...}`
    pub fn to_json_value(&self) -> serde_json::Value {
        let record = MatchingRecord {
            pairs: self
                .events
                .iter()
                .map(|e| PairRecord {
                    i: e.i,
                    j: e.j,
                    time: e.time,
                    cost: e.total,
                })
                .collect(),
            total: self.total(),
        };
        serde_json::to_value(record).expect("matching serializes")
    }
}
