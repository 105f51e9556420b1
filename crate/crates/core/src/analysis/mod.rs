//! The competitive analysis as executable checks.
//!
//! [`decompose`] replays the online matching over an optimal one and
//! builds the [`forest`]; [`checks`] evaluates each inequality of the
//! analysis with measured slack; [`report`] ties both to per-cycle cost
//! accounting and the overall ratio bound.
//!
//! Every inequality except the final ratio bound only needs the second
//! matching to be perfect and costed at the later arrival, so the checks
//! stay valid when a heuristic stands in for the optimum.

pub mod checks;
pub mod constants;
pub mod decompose;
pub mod forest;
pub mod report;

use thiserror::Error;

pub use checks::{Sample, Verdict};
pub use constants::AnalysisConstants;
pub use decompose::{decompose, AlgEdgeKind, AlternatingStructure, Cycle, Decomposition, EdgeOrigin};
pub use forest::{Forest, ForestNode, NodeRole};
pub use report::{analyze, competitive_report, AnalysisOptions, AnalysisReport, CycleReport, OptMethod};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid analysis input: {0}")]
    Input(String),
    #[error("inconsistent trace at ALG-edge {seq}: {reason}")]
    Inconsistent { seq: usize, reason: String },
}
