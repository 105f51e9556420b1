//! Inequalities of the analysis, evaluated with measured slack.
//!
//! Every check records `lhs <= rhs` samples. A sample passes when
//! `lhs <= rhs + tol * max(|lhs|, |rhs|) + ABS_FLOOR`; the floor only
//! matters when both sides are exactly zero up to rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::constants::AnalysisConstants;
use super::decompose::{AlgEdgeKind, AlternatingStructure, Decomposition};
use super::AnalysisError;
use crate::engine::AlgorithmParams;
use crate::instance::{Instance, RequestId};
use crate::matching::Matching;

/// Default relative tolerance of every checker.
pub const CHECK_TOL: f64 = 1e-7;

/// Absolute slack added on top of the relative tolerance.
pub const ABS_FLOOR: f64 = 1e-12;

/// Violations kept verbatim per verdict; the rest are only counted.
const KEPT_VIOLATIONS: usize = 16;

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    /// `slack / max(|lhs|, |rhs|)`, or 0 when both are 0.
    pub rel_slack: f64,
    pub at: String,
}

impl Sample {
    fn new(lhs: f64, rhs: f64, at: String) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        let slack = rhs - lhs;
        Self {
            lhs,
            rhs,
            slack,
            rel_slack: if scale > 0.0 { slack / scale } else { 0.0 },
            at,
        }
    }
}

/// Outcome of one checker over all its samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub tol: f64,
    pub evaluated: usize,
    /// Samples on a measure-zero boundary, accepted but not evaluated.
    pub boundary: usize,
    pub violation_count: usize,
    pub violations: Vec<Sample>,
    /// Sample with the smallest relative slack.
    pub tightest: Option<Sample>,
}

impl Verdict {
    pub fn new(check: impl Into<String>, tol: f64) -> Self {
        Self {
            check: check.into(),
            tol,
            evaluated: 0,
            boundary: 0,
            violation_count: 0,
            violations: Vec::new(),
            tightest: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.violation_count == 0
    }

    /// Whether `lhs <= rhs` within tolerance.
    pub fn allows(&self, lhs: f64, rhs: f64) -> bool {
        lhs <= rhs + self.tol * lhs.abs().max(rhs.abs()) + ABS_FLOOR
    }

    /// Records `lhs <= rhs`; `at` describes the sample and is only
    /// formatted when the sample is kept.
    pub fn record(&mut self, lhs: f64, rhs: f64, at: impl FnOnce() -> String) -> bool {
        self.evaluated += 1;
        let ok = self.allows(lhs, rhs) && !lhs.is_nan() && !rhs.is_nan();
        let scale = lhs.abs().max(rhs.abs());
        let rel = if scale > 0.0 { (rhs - lhs) / scale } else { 0.0 };
        let tighter = self.tightest.as_ref().is_none_or(|t| rel < t.rel_slack);
        let keep = !ok && self.violations.len() < KEPT_VIOLATIONS;
        if tighter || keep {
            let sample = Sample::new(lhs, rhs, at());
            if keep {
                self.violations.push(sample.clone());
            }
            if tighter {
                self.tightest = Some(sample);
            }
        }
        if !ok {
            self.violation_count += 1;
        }
        ok
    }

    /// Records `a == b` within tolerance as the pair `|a - b| <= 0`.
    pub fn record_equal(&mut self, a: f64, b: f64, at: impl FnOnce() -> String) -> bool {
        self.evaluated += 1;
        let scale = a.abs().max(b.abs());
        let ok = (a - b).abs() <= self.tol * scale + ABS_FLOOR;
        if !ok {
            self.violation_count += 1;
            if self.violations.len() < KEPT_VIOLATIONS {
                self.violations.push(Sample::new(a, b, at()));
            }
        }
        ok
    }

    /// Records a sample that fails without a numeric comparison.
    pub fn record_failure(&mut self, at: impl FnOnce() -> String) {
        self.evaluated += 1;
        self.violation_count += 1;
        if self.violations.len() < KEPT_VIOLATIONS {
            self.violations.push(Sample::new(f64::NAN, f64::NAN, at()));
        }
    }

    pub fn record_boundary(&mut self) {
        self.boundary += 1;
    }

    /// Folds another verdict of the same check into this one.
    pub fn absorb(&mut self, other: Verdict) {
        self.evaluated += other.evaluated;
        self.boundary += other.boundary;
        self.violation_count += other.violation_count;
        let room = KEPT_VIOLATIONS.saturating_sub(self.violations.len());
        self.violations.extend(other.violations.into_iter().take(room));
        if let Some(t) = other.tightest {
            if self.tightest.as_ref().is_none_or(|s| t.rel_slack < s.rel_slack) {
                self.tightest = Some(t);
            }
        }
    }
}

/// `atime` spread of `a` and `b` plus their distance: the cost any path
/// between them must at least pay.
fn space_time_gap(instance: &Instance, a: RequestId, b: RequestId) -> f64 {
    instance.dist(a, b) + (instance.atime(a) - instance.atime(b)).abs()
}

/// Times at which to probe the three-case property: every arrival and
/// match time, midpoints between consecutive ones, and `random` uniform
/// draws over the whole run.
pub fn observation_sample_times(instance: &Instance, matching: &Matching, random: usize, seed: u64) -> Vec<f64> {
    let mut times: Vec<f64> = instance
        .requests()
        .iter()
        .map(|r| r.atime)
        .chain(matching.events().iter().map(|e| e.time))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mids: Vec<f64> = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let (lo, hi) = (times[0], *times.last().expect("non-empty instance"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..random)
        .map(|_| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
        .collect();
    times.extend(mids);
    times.extend(draws);
    times
}

/// At each sampled `tau`, every pair that has arrived and is not matched
/// strictly before `tau` satisfies exactly one of: insufficient budgets;
/// sufficient budgets with `p` waiting at least `beta` times longer; the
/// same with `q`. Samples where the case count is off but some condition
/// sits at equality within tolerance count as boundary samples.
pub fn check_observation1(
    instance: &Instance,
    params: &AlgorithmParams,
    matching: &Matching,
    sample_times: &[f64],
    tol: f64,
) -> Verdict {
    let mut verdict = Verdict::new("observation1_trichotomy", tol);
    let n = instance.len();
    for &tau in sample_times {
        let live: Vec<RequestId> = (0..n)
            .filter(|&r| instance.atime(r) <= tau && matching.event_for(r).time >= tau)
            .collect();
        for (k, &p) in live.iter().enumerate() {
            for &q in &live[k + 1..] {
                let (wp, wq) = (tau - instance.atime(p), tau - instance.atime(q));
                let d = instance.dist(p, q);
                let s = params.alpha * (wp + wq) - d;
                let bp = wp - params.beta * wq;
                let bq = wq - params.beta * wp;
                let cases = [s <= 0.0, s > 0.0 && bp >= 0.0, s > 0.0 && bq >= 0.0];
                let holding = cases.iter().filter(|&&c| c).count();
                if holding == 1 {
                    verdict.evaluated += 1;
                    continue;
                }
                let scale = d.max(params.alpha * (wp + wq)).max(params.beta * wp.max(wq));
                let near = |x: f64| x.abs() <= tol * scale + ABS_FLOOR;
                if near(s) || near(bp) || near(bq) {
                    verdict.record_boundary();
                } else {
                    verdict.record_failure(|| {
                        format!("tau={tau} pair ({p},{q}): {holding} cases hold, s={s} bp={bp} bq={bq}")
                    });
                }
            }
        }
    }
    verdict
}

/// Eq. (1): an alternating path from `a_1` to `a_l` costs at least
/// `dist(a_1, a_l) + |atime(a_1) - atime(a_l)|`.
pub fn check_path_triangle(
    instance: &Instance,
    structure: &AlternatingStructure,
    tol: f64,
) -> Result<Verdict, AnalysisError> {
    let (a, b) = structure
        .endpoints()
        .ok_or_else(|| AnalysisError::Input("path triangle needs a path, got a cycle".into()))?;
    let mut verdict = Verdict::new("path_triangle", tol);
    verdict.record(space_time_gap(instance, a, b), structure.cost(), || {
        format!("path {a}..{b} of {} edges", structure.edges.len())
    });
    Ok(verdict)
}

/// Eq. (1) for every path joined or closed by an ALG-edge, using the
/// endpoint bookkeeping of the replay.
pub fn check_step_paths_triangle(instance: &Instance, decomposition: &Decomposition, tol: f64) -> Verdict {
    let mut verdict = Verdict::new("path_triangle", tol);
    for step in decomposition.steps() {
        for end in [step.at_i, step.at_j] {
            verdict.record(space_time_gap(instance, end.endpoint, end.far_end), end.cost, || {
                format!("seq {}: path {}..{}", step.seq, end.endpoint, end.far_end)
            });
        }
    }
    verdict
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Verdicts {
    /// `wait(p) <= max(1/alpha, beta/(beta-1)) * cost(P)` at both
    /// endpoints of every non-final edge.
    pub wait_bound: Verdict,
    /// Eq. (2): `cost(p, q) <= (1+alpha)(beta+1) * min(wait(p), wait(q))`
    /// on every ALG-edge.
    pub budget_chain: Verdict,
}

impl Lemma1Verdicts {
    pub fn ok(&self) -> bool {
        self.wait_bound.ok() && self.budget_chain.ok()
    }
}

pub fn check_lemma1(decomposition: &Decomposition, constants: &AnalysisConstants, tol: f64) -> Lemma1Verdicts {
    let mut wait_bound = Verdict::new("lemma1_wait_bound", tol);
    let mut budget_chain = Verdict::new("budget_chain", tol);
    let coef = constants.wait_coef();
    let chain = constants.budget_chain_coef();
    for (step, e) in decomposition.steps().iter().zip(decomposition.alg().events()) {
        budget_chain.record(e.total, chain * e.wait_i.min(e.wait_j), || format!("seq {}", e.seq));
        if step.kind == AlgEdgeKind::Final {
            continue;
        }
        for end in [step.at_i, step.at_j] {
            wait_bound.record(e.wait_of(end.endpoint), coef * end.cost, || {
                format!("seq {} endpoint {}", e.seq, end.endpoint)
            });
        }
    }
    Lemma1Verdicts {
        wait_bound,
        budget_chain,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeVerdicts {
    /// (a) `weight(w) <= xi * min(weight(T_u), weight(T_v))`.
    pub node_bound: Verdict,
    /// (b) `cost_ALG-NF(C) <= (xi+2) * m^log2(xi/2+1) * cost_OPT(C)`.
    pub cycle_bound: Verdict,
    /// (c) `ws(T_w) <= size(T_w)^log2(xi+2)` at every node.
    pub induction: Verdict,
    /// `weight(T) <= (xi+2) * |L(T)|^log2(xi/2+1) * weight(L(T))` per tree.
    pub tree_bound: Verdict,
}

impl TreeVerdicts {
    pub fn ok(&self) -> bool {
        self.node_bound.ok() && self.cycle_bound.ok() && self.induction.ok() && self.tree_bound.ok()
    }
}

pub fn check_corollary1_and_lemma3(
    decomposition: &Decomposition,
    constants: &AnalysisConstants,
    tol: f64,
) -> TreeVerdicts {
    let forest = decomposition.forest();
    let mut node_bound = Verdict::new("corollary1_node_bound", tol);
    let mut cycle_bound = Verdict::new("lemma3_cycle_bound", tol);
    let mut induction = Verdict::new("lemma4_induction", tol);
    let mut tree_bound = Verdict::new("lemma4_tree_bound", tol);

    for (id, node) in forest.nodes().iter().enumerate() {
        if let Some((u, v)) = node.children {
            let lighter = forest.node(u).subtree_weight.min(forest.node(v).subtree_weight);
            node_bound.record(node.weight, constants.xi * lighter, || format!("node {id}"));
        }
    }

    let bound = constants.non_final_bound(decomposition.pairs());
    for cycle in decomposition.cycles() {
        cycle_bound.record(cycle.cost_alg_non_final, bound * cycle.cost_opt, || {
            format!("cycle closed by seq {}", cycle.final_seq)
        });
    }

    let exp = constants.induction_exp();
    for root in forest.roots() {
        let r = forest.node(root);
        let leaves = r.leaf_count as f64;
        tree_bound.record(
            r.subtree_weight,
            constants.tree_coef * leaves.powf(constants.tree_exp) * r.leaf_weight,
            || format!("tree {root}"),
        );
        let scale = if r.leaf_weight > 0.0 {
            leaves / r.leaf_weight
        } else {
            1.0
        };
        for w in forest.subtree(root) {
            let n = forest.node(w);
            let size = n.leaf_weight * scale + n.leaf_count as f64;
            induction.record(n.subtree_weight * scale, size.powf(exp), || {
                format!("tree {root} node {w}")
            });
        }
    }

    TreeVerdicts {
        node_bound,
        cycle_bound,
        induction,
        tree_bound,
    }
}

/// Per cycle: `cost(final) <= final_coef * (cost_ALG-NF(C) + cost_OPT(C))`.
pub fn check_lemma5(decomposition: &Decomposition, constants: &AnalysisConstants, tol: f64) -> Verdict {
    let mut verdict = Verdict::new("lemma5_final_edge", tol);
    for cycle in decomposition.cycles() {
        verdict.record(
            cycle.final_cost,
            constants.final_coef * (cycle.cost_alg_non_final + cycle.cost_opt),
            || format!("cycle closed by seq {}", cycle.final_seq),
        );
    }
    verdict
}

/// Both sides of `xi * min(f(x), f(y)) + f(x) + f(y) <= f(x + y)` with
/// `f(a) = a^log2(xi + 2)`.
pub fn convex_sides(x: f64, y: f64, xi: f64) -> (f64, f64) {
    let e = (xi + 2.0).log2();
    let f = |a: f64| a.powf(e);
    let (fx, fy) = (f(x), f(y));
    (xi * fx.min(fy) + fx + fy, f(x + y))
}

/// Checks the convex inequality on `(x, y, xi)` samples.
pub fn check_lemma6(samples: &[(f64, f64, f64)], tol: f64) -> Verdict {
    let mut verdict = Verdict::new("lemma6_convex", tol);
    for &(x, y, xi) in samples {
        let (lhs, rhs) = convex_sides(x, y, xi);
        verdict.record(lhs, rhs, || format!("x={x} y={y} xi={xi}"));
    }
    verdict
}
