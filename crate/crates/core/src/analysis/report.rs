//! Per-cycle accounting and the full analysis of one instance.

use serde::Serialize;
use thiserror::Error;

use super::checks::{self, Verdict, CHECK_TOL};
use super::constants::AnalysisConstants;
use super::decompose::{decompose, AlgEdgeKind, Decomposition, EdgeOrigin};
use super::AnalysisError;
use crate::engine::{run_online, AlgorithmParams};
use crate::instance::{Instance, RequestId};
use crate::matching::Matching;
use crate::metric::MetricSpace;
use crate::offline::{line_opt_matching, opt_matching_with_cap, OfflineError, DEFAULT_DP_CAP};

/// Tolerance of the cost-conservation identities.
pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptMethod {
    /// Subset dynamic program.
    Exact,
    /// Sorted pairing on a line with simultaneous arrivals.
    Line,
    /// Supplied by the caller.
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub tol: f64,
    /// Uniform time samples for the three-case check, on top of every
    /// arrival, match time and midpoint.
    pub observation_samples: usize,
    pub seed: u64,
    pub dp_cap: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tol: CHECK_TOL,
            observation_samples: 64,
            seed: 0,
            dp_cap: DEFAULT_DP_CAP,
        }
    }
}

/// One `lhs <= rhs` bound evaluated on a single cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub id: usize,
    pub requests: Vec<RequestId>,
    pub opt_edges: usize,
    pub non_final_edges: usize,
    pub final_seq: usize,
    pub cost_opt: f64,
    pub cost_alg_non_final: f64,
    pub final_cost: f64,
    pub cost: f64,
    /// `cost_ALG(C) / cost_OPT(C)`; absent when `cost_OPT(C) = 0`.
    pub ratio: Option<f64>,
    pub bounds: Vec<Bound>,
    /// Bound with the smallest relative slack.
    pub tightest: &'static str,
}

impl CycleReport {
    pub fn cost_alg(&self) -> f64 {
        self.cost_alg_non_final + self.final_cost
    }

    pub fn ok(&self) -> bool {
        self.bounds.iter().all(|b| b.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub params: AlgorithmParams,
    pub constants: AnalysisConstants,
    pub m: usize,
    pub opt_method: OptMethod,
    pub alg_total: f64,
    pub opt_total: f64,
    /// `alg_total / opt_total`; absent when `opt_total = 0`.
    pub ratio: Option<f64>,
    /// Per-cycle ratio bound `(1+final_coef) * (xi+2) * m^tree_exp + final_coef`.
    pub theorem_bound: f64,
    pub final_edges: usize,
    pub non_final_edges: usize,
    pub cycles: Vec<CycleReport>,
    pub verdicts: Vec<Verdict>,
    pub conservation: Vec<Verdict>,
    pub violations: usize,
    /// Checker whose tightest sample has the smallest relative slack.
    pub tightest: Option<String>,
}

impl AnalysisReport {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts
            .iter()
            .chain(&self.conservation)
            .find(|v| v.check == check)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("OPT unavailable: {0}")]
    Opt(#[from] OfflineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Optimal matching for the analysis: the exact solver within `dp_cap`,
/// else the line solver when it applies.
pub fn optimal_for_analysis(instance: &Instance, dp_cap: usize) -> Result<(Matching, OptMethod), OfflineError> {
    match opt_matching_with_cap(instance, dp_cap) {
        Ok(m) => Ok((m, OptMethod::Exact)),
        Err(cap @ OfflineError::Capacity { .. }) => {
            if matches!(instance.space(), MetricSpace::Line { .. }) && instance.is_simultaneous() {
                Ok((line_opt_matching(instance)?, OptMethod::Line))
            } else {
                Err(cap)
            }
        }
        Err(e) => Err(e),
    }
}

/// Runs the online algorithm, solves OPT and analyses the pair.
pub fn competitive_report(
    instance: &Instance,
    params: &AlgorithmParams,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, ReportError> {
    let run = run_online(instance, params);
    let (opt, method) = optimal_for_analysis(instance, options.dp_cap)?;
    Ok(analyze(instance, params, &run.matching, &opt, method, options)?)
}

fn bound(name: &'static str, lhs: f64, rhs: f64, tol: f64) -> Bound {
    Bound {
        name,
        lhs,
        rhs,
        slack: rhs - lhs,
        ok: lhs <= rhs + tol * lhs.abs().max(rhs.abs()) + checks::ABS_FLOOR,
    }
}

fn rel_slack(b: &Bound) -> f64 {
    let scale = b.lhs.abs().max(b.rhs.abs());
    if scale > 0.0 {
        b.slack / scale
    } else {
        0.0
    }
}

/// Full analysis of an online matching `alg` against `opt`.
pub fn analyze(
    instance: &Instance,
    params: &AlgorithmParams,
    alg: &Matching,
    opt: &Matching,
    opt_method: OptMethod,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    if alg.request_count() != instance.len() {
        return Err(AnalysisError::Input(format!(
            "matching covers {} requests, instance has {}",
            alg.request_count(),
            instance.len()
        )));
    }
    let tol = options.tol;
    let constants = AnalysisConstants::from_params(params);
    let d = decompose(alg, opt)?;
    let m = d.pairs();

    let times = checks::observation_sample_times(instance, alg, options.observation_samples, options.seed);
    let observation = checks::check_observation1(instance, params, alg, &times, tol);
    let mut triangle = checks::check_step_paths_triangle(instance, &d, tol);
    for cycle in d.cycles() {
        triangle.absorb(checks::check_path_triangle(
            instance,
            &cycle.structure.without_final_edge()?,
            tol,
        )?);
    }
    let lemma1 = checks::check_lemma1(&d, &constants, tol);
    let trees = checks::check_corollary1_and_lemma3(&d, &constants, tol);
    let lemma5 = checks::check_lemma5(&d, &constants, tol);

    let cycles = cycle_reports(&d, &constants, tol);
    let mut theorem = Verdict::new("theorem_cycle_ratio", tol);
    let theorem_bound = constants.ratio_bound(m);
    for c in &cycles {
        theorem.record(c.cost_alg(), theorem_bound * c.cost_opt, || format!("cycle {}", c.id));
    }

    let verdicts = vec![
        observation,
        triangle,
        lemma1.wait_bound,
        lemma1.budget_chain,
        trees.node_bound,
        trees.cycle_bound,
        trees.induction,
        trees.tree_bound,
        lemma5,
        theorem,
    ];
    let conservation = conservation_checks(&d, &cycles);
    let violations = verdicts.iter().chain(&conservation).map(|v| v.violation_count).sum();
    let tightest = verdicts
        .iter()
        .filter_map(|v| v.tightest.as_ref().map(|s| (s.rel_slack, &v.check)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, name)| name.clone());

    let (alg_total, opt_total) = (alg.total(), opt.total());
    Ok(AnalysisReport {
        params: *params,
        constants,
        m,
        opt_method,
        alg_total,
        opt_total,
        ratio: (opt_total > 0.0).then(|| alg_total / opt_total),
        theorem_bound,
        final_edges: d.final_count(),
        non_final_edges: d.non_final_count(),
        cycles,
        verdicts,
        conservation,
        violations,
        tightest,
    })
}

fn cycle_reports(d: &Decomposition, constants: &AnalysisConstants, tol: f64) -> Vec<CycleReport> {
    let forest = d.forest();
    let m = d.pairs();
    d.cycles()
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let root = forest.node(c.tree);
            let leaves = root.leaf_count as f64;
            let bounds = vec![
                bound(
                    "lemma3_cycle_bound",
                    c.cost_alg_non_final,
                    constants.non_final_bound(m) * c.cost_opt,
                    tol,
                ),
                bound(
                    "lemma4_tree_bound",
                    root.subtree_weight,
                    constants.tree_coef * leaves.powf(constants.tree_exp) * root.leaf_weight,
                    tol,
                ),
                bound(
                    "lemma5_final_edge",
                    c.final_cost,
                    constants.final_coef * (c.cost_alg_non_final + c.cost_opt),
                    tol,
                ),
                bound(
                    "theorem_cycle_ratio",
                    c.cost_alg(),
                    (1.0 + constants.final_coef) * c.cost_alg_non_final + constants.final_coef * c.cost_opt,
                    tol,
                ),
            ];
            let tightest = bounds
                .iter()
                .min_by(|a, b| rel_slack(a).total_cmp(&rel_slack(b)))
                .map_or("", |b| b.name);
            let non_final_edges = c
                .structure
                .edges
                .iter()
                .filter(|e| e.origin == EdgeOrigin::Alg && !e.is_final)
                .count();
            CycleReport {
                id,
                requests: c.structure.nodes.clone(),
                opt_edges: c.opt_edges(),
                non_final_edges,
                final_seq: c.final_seq,
                cost_opt: c.cost_opt,
                cost_alg_non_final: c.cost_alg_non_final,
                final_cost: c.final_cost,
                cost: c.cost(),
                ratio: (c.cost_opt > 0.0).then(|| c.cost_alg() / c.cost_opt),
                bounds,
                tightest,
            }
        })
        .collect()
}

/// Cost and shape identities tying cycles, forest and totals together.
fn conservation_checks(d: &Decomposition, cycles: &[CycleReport]) -> Vec<Verdict> {
    let tol = CONSERVATION_TOL;
    let mut totals = Verdict::new("conservation_totals", tol);
    let opt_sum: f64 = cycles.iter().map(|c| c.cost_opt).sum();
    let alg_sum: f64 = cycles.iter().map(|c| c.cost_alg()).sum();
    totals.record_equal(opt_sum, d.opt().total(), || "sum of cost_OPT(C) vs OPT".into());
    totals.record_equal(alg_sum, d.alg().total(), || "sum of cost_ALG(C) vs ALG".into());

    let mut per_cycle = Verdict::new("conservation_cycle", tol);
    let mut shape = Verdict::new("forest_shape", tol);
    let forest = d.forest();
    for (c, report) in d.cycles().iter().zip(cycles) {
        per_cycle.record_equal(report.cost_alg() + report.cost_opt, report.cost, || {
            format!("cycle {}", report.id)
        });
        let root = forest.node(c.tree);
        per_cycle.record_equal(root.subtree_weight, report.cost - report.final_cost, || {
            format!("cycle {} tree weight", report.id)
        });
        per_cycle.record_equal(root.leaf_weight, report.cost_opt, || {
            format!("cycle {} leaf weight", report.id)
        });
        let internal = forest.subtree(c.tree).len() - root.leaf_count;
        if root.leaf_count != report.opt_edges || internal != report.non_final_edges {
            shape.record_failure(|| {
                format!(
                    "cycle {}: {} leaves / {} OPT-edges, {} internal / {} non-final",
                    report.id, root.leaf_count, report.opt_edges, internal, report.non_final_edges
                )
            });
        } else {
            shape.evaluated += 1;
        }
    }
    let non_final = d.steps().iter().filter(|s| s.kind == AlgEdgeKind::NonFinal).count();
    if forest.leaf_count() != d.pairs() || forest.internal_count() != non_final || d.final_count() != cycles.len() {
        shape.record_failure(|| "forest size does not match edge counts".into());
    } else {
        shape.evaluated += 1;
    }
    if !forest.is_consistent(tol) {
        shape.record_failure(|| "forest aggregates do not add up".into());
    }
    vec![totals, per_cycle, shape]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceMeta;

    fn line(coords: Vec<f64>, times: &[f64]) -> Instance {
        Instance::from_points(MetricSpace::line(coords).unwrap(), times, InstanceMeta::default()).unwrap()
    }

    #[test]
    fn single_pair_ratio_three() {
        let inst = line(vec![0.0, 2.0], &[0.0, 0.0]);
        let r = competitive_report(&inst, &AlgorithmParams::default(), &AnalysisOptions::default()).unwrap();
        assert!(r.ok());
        assert_eq!(r.ratio, Some(3.0));
        assert_eq!(r.cycles.len(), 1);
        assert_eq!(r.cycles[0].tightest, "lemma5_final_edge");
        assert!(r.ratio.unwrap() <= r.theorem_bound);
        assert_eq!(r.opt_method, OptMethod::Exact);
    }

    #[test]
    fn identical_matchings_slack_in_final_edges() {
        let inst = line(vec![0.0, 1.0, 10.0, 12.0], &[0.0, 0.5, 1.0, 3.0]);
        let params = AlgorithmParams::default();
        let run = run_online(&inst, &params);
        let opt = Matching::at_later_arrival(&inst, &run.matching.pair_set().into_iter().collect::<Vec<_>>()).unwrap();
        let r = analyze(
            &inst,
            &params,
            &run.matching,
            &opt,
            OptMethod::Given,
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!(r.ok(), "{}", r.to_json_string());
        assert_eq!(r.non_final_edges, 0);
        assert!(r.ratio.unwrap() >= 1.0);
        for c in &r.cycles {
            assert_eq!(c.cost_alg_non_final, 0.0);
            assert_eq!(c.opt_edges, 1);
        }
    }

    #[test]
    fn json_report_shape() {
        let inst = line(vec![0.0, 1.0, 3.0, 4.5], &[0.0; 4]);
        let r = competitive_report(&inst, &AlgorithmParams::default(), &AnalysisOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json_string()).unwrap();
        assert_eq!(v["constants"]["final_coef"], 4.5);
        assert_eq!(v["m"], 2);
        assert_eq!(v["opt_method"], "exact");
        assert!(v["cycles"][0]["bounds"].is_array());
        assert!(r.verdict("lemma1_wait_bound").is_some());
        assert!(r.verdict("conservation_totals").unwrap().ok());
    }

    #[test]
    fn capacity_and_line_fallback() {
        let coords: Vec<f64> = (0..24).map(|k| (k * k) as f64).collect();
        let inst = line(coords, &[0.0; 24]);
        let (_, method) = optimal_for_analysis(&inst, 22).unwrap();
        assert_eq!(method, OptMethod::Line);
        let timed = line(
            (0..24).map(f64::from).collect(),
            &(0..24).map(f64::from).collect::<Vec<_>>(),
        );
        assert!(matches!(
            optimal_for_analysis(&timed, 22),
            Err(OfflineError::Capacity { .. })
        ));
    }
}
