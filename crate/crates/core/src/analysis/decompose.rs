//! Replay of ALG-edges over the fixed OPT-edges.
//!
//! At every step the union of all OPT-edges and the ALG-edges added so
//! far is a disjoint union of alternating paths and cycles, and every
//! maximal path starts and ends with an OPT-edge. Adding the next
//! ALG-edge either joins two paths (non-final) or closes one path into a
//! cycle (final).
//!
//! Only path endpoints carry state: `far_end[x]` is the other end of the
//! path ending at `x`, together with that path's cost and forest tree.
//! Joining two paths rewires the two far ends to each other, so the whole
//! replay is O(m).

use serde::Serialize;

use super::forest::{Forest, NodeId};
use super::AnalysisError;
use crate::instance::RequestId;
use crate::matching::Matching;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeOrigin {
    Opt,
    Alg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgEdgeKind {
    NonFinal,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureEdge {
    pub origin: EdgeOrigin,
    pub a: RequestId,
    pub b: RequestId,
    pub cost: f64,
    /// Creation order, for ALG-edges.
    pub seq: Option<usize>,
    pub is_final: bool,
}

/// An alternating path or cycle.
///
/// For a path, `edges[k]` joins `nodes[k]` and `nodes[k + 1]`. For a
/// cycle, the last edge joins the last node back to the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternatingStructure {
    pub nodes: Vec<RequestId>,
    pub edges: Vec<StructureEdge>,
    pub closed: bool,
}

impl AlternatingStructure {
    pub fn cost(&self) -> f64 {
        self.edges.iter().map(|e| e.cost).sum()
    }

    pub fn cost_opt(&self) -> f64 {
        self.cost_of(|e| e.origin == EdgeOrigin::Opt)
    }

    pub fn cost_alg(&self) -> f64 {
        self.cost_of(|e| e.origin == EdgeOrigin::Alg)
    }

    pub fn cost_alg_non_final(&self) -> f64 {
        self.cost_of(|e| e.origin == EdgeOrigin::Alg && !e.is_final)
    }

    fn cost_of(&self, pick: impl Fn(&StructureEdge) -> bool) -> f64 {
        self.edges.iter().filter(|e| pick(e)).map(|e| e.cost).sum()
    }

    pub fn final_edge(&self) -> Option<&StructureEdge> {
        self.edges.iter().find(|e| e.is_final)
    }

    /// First and last node of a path.
    pub fn endpoints(&self) -> Option<(RequestId, RequestId)> {
        if self.closed {
            None
        } else {
            Some((self.nodes[0], *self.nodes.last().expect("non-empty path")))
        }
    }

    /// Edges strictly alternate; paths start and end with OPT-edges.
    pub fn is_alternating(&self) -> bool {
        let alternates = self.edges.windows(2).all(|w| w[0].origin != w[1].origin);
        let wraps =
            !self.closed || self.edges.len() < 2 || self.edges[0].origin != self.edges[self.edges.len() - 1].origin;
        let opt_ends = self.closed
            || (self.edges.first().map(|e| e.origin) == Some(EdgeOrigin::Opt)
                && self.edges.last().map(|e| e.origin) == Some(EdgeOrigin::Opt));
        alternates && wraps && opt_ends
    }

    /// The path left after removing a cycle's final edge, running from one
    /// endpoint of that edge to the other.
    pub fn without_final_edge(&self) -> Result<AlternatingStructure, AnalysisError> {
        if !self.closed {
            return Err(AnalysisError::Input("path has no final edge".into()));
        }
        let k = self
            .edges
            .iter()
            .position(|e| e.is_final)
            .ok_or_else(|| AnalysisError::Input("cycle without a final edge".into()))?;
        let len = self.nodes.len();
        let nodes = (0..len).map(|s| self.nodes[(k + 1 + s) % len]).collect();
        let edges = (0..len - 1).map(|s| self.edges[(k + 1 + s) % len]).collect();
        Ok(AlternatingStructure {
            nodes,
            edges,
            closed: false,
        })
    }
}

/// The `(κ-1)`-step maximal path ending at one endpoint of the κ-th
/// ALG-edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathEnd {
    pub endpoint: RequestId,
    pub far_end: RequestId,
    pub cost: f64,
    pub tree: NodeId,
}

/// One replayed ALG-edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub seq: usize,
    pub kind: AlgEdgeKind,
    /// Path ending at the edge's `i` endpoint (for a final edge, the one
    /// path being closed, seen from `i`).
    pub at_i: PathEnd,
    /// Path ending at the edge's `j` endpoint.
    pub at_j: PathEnd,
    /// Tree standing for the path or cycle after this step.
    pub tree: NodeId,
}

/// A closed alternating cycle with its accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cycle {
    pub structure: AlternatingStructure,
    pub tree: NodeId,
    pub final_seq: usize,
    pub cost_opt: f64,
    pub cost_alg_non_final: f64,
    pub final_cost: f64,
}

impl Cycle {
    pub fn cost_alg(&self) -> f64 {
        self.cost_alg_non_final + self.final_cost
    }

    pub fn cost(&self) -> f64 {
        self.structure.cost()
    }

    /// Number of OPT-edges on the cycle.
    pub fn opt_edges(&self) -> usize {
        self.structure.nodes.len() / 2
    }
}

/// Result of replaying ALG over OPT.
#[derive(Debug, Clone)]
pub struct Decomposition<'a> {
    alg: &'a Matching,
    opt: &'a Matching,
    steps: Vec<Step>,
    cycles: Vec<Cycle>,
    forest: Forest,
}

/// Replays `alg`'s edges in creation order over `opt`'s edges, labels each
/// ALG-edge final or non-final, grows the forest and collects the final
/// cycles.
pub fn decompose<'a>(alg: &'a Matching, opt: &'a Matching) -> Result<Decomposition<'a>, AnalysisError> {
    let n = alg.request_count();
    if opt.request_count() != n {
        return Err(AnalysisError::Input(format!(
            "ALG covers {n} requests but OPT covers {}",
            opt.request_count()
        )));
    }

    let mut forest = Forest::default();
    let mut far_end = vec![usize::MAX; n];
    let mut path_cost = vec![0.0f64; n];
    let mut tree = vec![usize::MAX; n];
    for (k, e) in opt.events().iter().enumerate() {
        let leaf = forest.add_leaf(k, e.i, e.j, e.total);
        for (x, y) in [(e.i, e.j), (e.j, e.i)] {
            far_end[x] = y;
            path_cost[x] = e.total;
            tree[x] = leaf;
        }
    }

    let mut is_endpoint = vec![true; n];
    let mut steps = Vec::with_capacity(alg.len());
    for e in alg.events() {
        for x in [e.i, e.j] {
            if !is_endpoint[x] {
                return Err(AnalysisError::Inconsistent {
                    seq: e.seq,
                    reason: format!("request {x} is not the end of an alternating path"),
                });
            }
        }
        let at = |x: RequestId| PathEnd {
            endpoint: x,
            far_end: far_end[x],
            cost: path_cost[x],
            tree: tree[x],
        };
        let (at_i, at_j) = (at(e.i), at(e.j));
        is_endpoint[e.i] = false;
        is_endpoint[e.j] = false;

        let step = if at_i.far_end == e.j {
            Step {
                seq: e.seq,
                kind: AlgEdgeKind::Final,
                at_i,
                at_j,
                tree: at_i.tree,
            }
        } else {
            let node = forest.join(e.seq, e.total, at_i.tree, at_j.tree);
            let (a, b) = (at_i.far_end, at_j.far_end);
            let cost = at_i.cost + at_j.cost + e.total;
            for (x, y) in [(a, b), (b, a)] {
                far_end[x] = y;
                path_cost[x] = cost;
                tree[x] = node;
            }
            Step {
                seq: e.seq,
                kind: AlgEdgeKind::NonFinal,
                at_i,
                at_j,
                tree: node,
            }
        };
        steps.push(step);
    }

    let cycles = collect_cycles(alg, opt, &steps);
    Ok(Decomposition {
        alg,
        opt,
        steps,
        cycles,
        forest,
    })
}

fn collect_cycles(alg: &Matching, opt: &Matching, steps: &[Step]) -> Vec<Cycle> {
    let n = alg.request_count();
    let mut visited = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut cur = start;
        loop {
            let o = opt.event_for(cur);
            let next = o.other(cur);
            nodes.push(cur);
            edges.push(StructureEdge {
                origin: EdgeOrigin::Opt,
                a: cur,
                b: next,
                cost: o.total,
                seq: None,
                is_final: false,
            });
            let a = alg.event_for(next);
            let back = a.other(next);
            nodes.push(next);
            edges.push(StructureEdge {
                origin: EdgeOrigin::Alg,
                a: next,
                b: back,
                cost: a.total,
                seq: Some(a.seq),
                is_final: steps[a.seq - 1].kind == AlgEdgeKind::Final,
            });
            visited[cur] = true;
            visited[next] = true;
            cur = back;
            if cur == start {
                break;
            }
        }
        let structure = AlternatingStructure {
            nodes,
            edges,
            closed: true,
        };
        let fin = *structure.final_edge().expect("every cycle is closed by one final edge");
        let final_seq = fin.seq.expect("final edges are ALG-edges");
        cycles.push(Cycle {
            tree: steps[final_seq - 1].tree,
            final_seq,
            cost_opt: structure.cost_opt(),
            cost_alg_non_final: structure.cost_alg_non_final(),
            final_cost: fin.cost,
            structure,
        });
    }
    cycles
}

impl<'a> Decomposition<'a> {
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn alg(&self) -> &'a Matching {
        self.alg
    }

    pub fn opt(&self) -> &'a Matching {
        self.opt
    }

    /// Number of pairs `m`.
    pub fn pairs(&self) -> usize {
        self.alg.len()
    }

    pub fn kind_of(&self, seq: usize) -> AlgEdgeKind {
        self.steps[seq - 1].kind
    }

    pub fn final_count(&self) -> usize {
        self.steps.iter().filter(|s| s.kind == AlgEdgeKind::Final).count()
    }

    pub fn non_final_count(&self) -> usize {
        self.steps.len() - self.final_count()
    }

    /// The κ-step maximal alternating paths: what remains open after the
    /// first `kappa` ALG-edges. Cycles closed by then are not included.
    pub fn paths_after(&self, kappa: usize) -> Vec<AlternatingStructure> {
        let n = self.alg.request_count();
        let kappa = kappa.min(self.alg.len());
        let mut alg_partner: Vec<Option<(RequestId, usize)>> = vec![None; n];
        for e in &self.alg.events()[..kappa] {
            alg_partner[e.i] = Some((e.j, e.seq));
            alg_partner[e.j] = Some((e.i, e.seq));
        }
        let mut visited = vec![false; n];
        let mut paths = Vec::new();
        for start in 0..n {
            if visited[start] || alg_partner[start].is_some() {
                continue;
            }
            let mut nodes = vec![start];
            let mut edges = Vec::new();
            let mut cur = start;
            visited[start] = true;
            loop {
                let o = self.opt.event_for(cur);
                let next = o.other(cur);
                edges.push(StructureEdge {
                    origin: EdgeOrigin::Opt,
                    a: cur,
                    b: next,
                    cost: o.total,
                    seq: None,
                    is_final: false,
                });
                nodes.push(next);
                visited[next] = true;
                let Some((back, seq)) = alg_partner[next] else {
                    break;
                };
                edges.push(StructureEdge {
                    origin: EdgeOrigin::Alg,
                    a: next,
                    b: back,
                    cost: self.alg.events()[seq - 1].total,
                    seq: Some(seq),
                    is_final: false,
                });
                nodes.push(back);
                visited[back] = true;
                cur = back;
            }
            paths.push(AlternatingStructure {
                nodes,
                edges,
                closed: false,
            });
        }
        paths
    }
}
