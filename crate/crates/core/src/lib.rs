//! Simulation and analysis laboratory for online min-cost perfect
//! matching with delays.
//!
//! Requests arrive over time at points of a metric space and must be
//! paired; a pair costs its distance plus the waiting time of both
//! requests. The crate provides:
//!
//! - [`metric`] and [`instance`]: metric spaces, request sequences,
//!   generators and the JSON instance format;
//! - [`engine`]: the deterministic budget-based online algorithm as an
//!   event-driven simulator with a full audit trace;
//! - [`offline`]: exact and heuristic offline solvers;
//! - [`analysis`]: the alternating-cycle decomposition of the online and
//!   optimal matchings, the binary forest built from it, and runtime
//!   checkers for every inequality of the competitive analysis.

// symmetric matrix and subset-table loops read best with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod engine;
pub mod format;
pub mod instance;
pub mod matching;
pub mod metric;
pub mod offline;

pub use engine::{readiness_time, run_online, AlgorithmParams, OnlineRun, TieBreak, Trace};
pub use instance::{Instance, InstanceError, InstanceMeta, Request, RequestId, SpaceKind};
pub use matching::{MatchEvent, Matching, MatchingError};
pub use metric::{MetricSpace, PointId};
