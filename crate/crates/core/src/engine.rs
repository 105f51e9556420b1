//! The deterministic online algorithm as an event-driven simulator.
//!
//! Every request accrues a budget `alpha * wait`. Two live requests are
//! matched at the first moment their budgets together cover their
//! distance (sufficiency) and neither waited more than `beta` times the
//! other (balance). Both conditions are monotone in time, so each pair
//! has a closed-form readiness time; the simulator keeps those in a
//! priority queue and processes arrivals and matches in time order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::format::sig12;
use crate::instance::{Instance, RequestId};
use crate::matching::{MatchEvent, Matching};

/// Tolerance for time comparisons.
pub const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("alpha must be a finite number > 0, got {0}")]
    Alpha(f64),
    #[error("beta must be a finite number > 1, got {0}")]
    Beta(f64),
}

/// Order among pairs that become ready at the same instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Smaller `(min id, max id)` first.
    #[default]
    LowIdsFirst,
    /// Larger `(min id, max id)` first.
    HighIdsFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgorithmParams {
    pub alpha: f64,
    pub beta: f64,
    pub tie_break: TieBreak,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 2.0,
            tie_break: TieBreak::LowIdsFirst,
        }
    }
}

impl AlgorithmParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ParamError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ParamError::Alpha(alpha));
        }
        if !(beta.is_finite() && beta > 1.0) {
            return Err(ParamError::Beta(beta));
        }
        Ok(Self {
            alpha,
            beta,
            tie_break: TieBreak::default(),
        })
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    #[inline]
    pub fn budget(&self, wait: f64) -> f64 {
        self.alpha * wait
    }
}

/// Earliest time `tau >= max(t_p, t_q)` at which a pair at distance `d`
/// arriving at `t_p` and `t_q` satisfies both matching conditions.
///
/// With `t_p <= t_q` this is the largest of `t_q`, the sufficiency
/// threshold `(d/alpha + t_p + t_q) / 2` and the balance threshold
/// `(beta t_q - t_p) / (beta - 1)`.
pub fn readiness_time(t_p: f64, t_q: f64, d: f64, params: &AlgorithmParams) -> f64 {
    let (early, late) = if t_p <= t_q { (t_p, t_q) } else { (t_q, t_p) };
    let sufficiency = (d / params.alpha + early + late) / 2.0;
    let balance = (params.beta * late - early) / (params.beta - 1.0);
    late.max(sufficiency).max(balance)
}

/// Whether both conditions hold at `tau` (exact, no tolerance).
pub fn ready_at(t_p: f64, t_q: f64, d: f64, tau: f64, params: &AlgorithmParams) -> bool {
    if tau < t_p || tau < t_q {
        return false;
    }
    let (wp, wq) = (tau - t_p, tau - t_q);
    params.budget(wp) + params.budget(wq) >= d && wp <= params.beta * wq && wq <= params.beta * wp
}

/// A trace row: the match event plus both budgets at the match time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    #[serde(flatten)]
    pub event: MatchEvent,
    pub budget_i: f64,
    pub budget_j: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

pub const TRACE_CSV_HEADER: &str = "seq,i,j,match_time,dist,wait_i,wait_j,total,budget_i,budget_j";

impl Trace {
    /// CSV with 12 significant digits per real column.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let e = &r.event;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                e.seq,
                e.i,
                e.j,
                sig12(e.time),
                sig12(e.dist),
                sig12(e.wait_i),
                sig12(e.wait_j),
                sig12(e.total),
                sig12(r.budget_i),
                sig12(r.budget_j)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRun {
    pub matching: Matching,
    pub trace: Trace,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    ready: f64,
    lo: RequestId,
    hi: RequestId,
    tie_break: TieBreak,
}

impl Candidate {
    // Smaller key = processed earlier.
    fn key_cmp(&self, other: &Self) -> Ordering {
        let ids = (self.lo, self.hi).cmp(&(other.lo, other.hi));
        let ids = match self.tie_break {
            TieBreak::LowIdsFirst => ids,
            TieBreak::HighIdsFirst => ids.reverse(),
        };
        self.ready.total_cmp(&other.ready).then(ids)
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap
        other.key_cmp(self)
    }
}

/// Runs the online algorithm to completion.
///
/// Arrivals are processed before any pair whose readiness time is not
/// earlier than the arrival, so pairs created by a request arriving at
/// `t` compete fairly with pairs ready at `t`. Stale candidates (an
/// endpoint already matched) are dropped lazily.
pub fn run_online(instance: &Instance, params: &AlgorithmParams) -> OnlineRun {
    let n = instance.len();
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut live: Vec<RequestId> = Vec::new();
    let mut matched = vec![false; n];
    let mut next_arrival = 0;
    let mut events: Vec<MatchEvent> = Vec::with_capacity(n / 2);
    let mut records: Vec<TraceRecord> = Vec::with_capacity(n / 2);

    while events.len() < n / 2 {
        let arrival_first = next_arrival < n && heap.peek().is_none_or(|c| instance.atime(next_arrival) <= c.ready);
        if arrival_first {
            let r = next_arrival;
            next_arrival += 1;
            let t_r = instance.atime(r);
            for &s in &live {
                heap.push(Candidate {
                    ready: readiness_time(instance.atime(s), t_r, instance.dist(s, r), params),
                    lo: s.min(r),
                    hi: s.max(r),
                    tie_break: params.tie_break,
                });
            }
            live.push(r);
            continue;
        }
        let c = heap.pop().expect("live requests always have candidate pairs");
        if matched[c.lo] || matched[c.hi] {
            continue;
        }
        matched[c.lo] = true;
        matched[c.hi] = true;
        live.retain(|&r| r != c.lo && r != c.hi);
        let event = MatchEvent::new(instance, events.len() + 1, c.lo, c.hi, c.ready);
        records.push(TraceRecord {
            event,
            budget_i: params.budget(event.wait_i),
            budget_j: params.budget(event.wait_j),
        });
        events.push(event);
    }

    let matching = Matching::new(instance, events).expect("engine produces a perfect matching");
    OnlineRun {
        matching,
        trace: Trace { records },
    }
}

/// A pair that was ready strictly before either endpoint got matched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EarlyActionViolation {
    pub a: RequestId,
    pub b: RequestId,
    pub ready: f64,
    pub first_match: f64,
}

/// Replays a run and lists pairs the algorithm should have matched
/// earlier. Readiness within `tol` (relative to the time scale) of the
/// first endpoint's match time counts as a tie, not a violation.
pub fn verify_earliest_action(
    instance: &Instance,
    params: &AlgorithmParams,
    matching: &Matching,
    tol: f64,
) -> Vec<EarlyActionViolation> {
    let n = instance.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let first_match = matching.event_for(a).time.min(matching.event_for(b).time);
            let ready = readiness_time(instance.atime(a), instance.atime(b), instance.dist(a, b), params);
            if ready < first_match - tol * first_match.abs().max(1.0) {
                out.push(EarlyActionViolation {
                    a,
                    b,
                    ready,
                    first_match,
                });
            }
        }
    }
    out
}

/// Checks each event's firing conditions at its own match time:
/// `alpha (wait_i + wait_j) >= dist` and mutual `beta` balance, within
/// `tol` relative slack. Returns the seqs that fail.
pub fn verify_firing_conditions(matching: &Matching, params: &AlgorithmParams, tol: f64) -> Vec<usize> {
    matching
        .events()
        .iter()
        .filter(|e| {
            let scale = e.total.max(1.0);
            let sufficient = params.alpha * (e.wait_i + e.wait_j) >= e.dist - tol * scale;
            let balanced =
                e.wait_i <= params.beta * e.wait_j + tol * scale && e.wait_j <= params.beta * e.wait_i + tol * scale;
            !(sufficient && balanced)
        })
        .map(|e| e.seq)
        .collect()
}
