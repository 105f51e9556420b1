//! Cross-module invariants over generated instances.

use proptest::prelude::*;

use mpmd_core::analysis::checks::{check_path_triangle, CHECK_TOL};
use mpmd_core::analysis::report::{analyze, AnalysisOptions, OptMethod};
use mpmd_core::analysis::{decompose, AlgEdgeKind, EdgeOrigin};
use mpmd_core::engine::{run_online, verify_earliest_action, verify_firing_conditions, AlgorithmParams, TieBreak};
use mpmd_core::instance::{generate_random_simultaneous, generate_uniform, jitter, Instance, SpaceKind};
use mpmd_core::metric::{validate_metric, DEFAULT_METRIC_TOL};
use mpmd_core::offline::{greedy_matching, opt_matching};

fn kind() -> impl Strategy<Value = SpaceKind> {
    prop_oneof![
        Just(SpaceKind::Line),
        Just(SpaceKind::Euclidean(2)),
        Just(SpaceKind::Euclidean(4)),
        Just(SpaceKind::Matrix),
    ]
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=8, kind(), 0.0f64..30.0, any::<u64>())
        .prop_map(|(pairs, kind, horizon, seed)| generate_uniform(pairs, kind, 10.0, horizon, seed).unwrap())
}

fn params() -> impl Strategy<Value = AlgorithmParams> {
    (0.05f64..5.0, 1.05f64..5.0, any::<bool>()).prop_map(|(a, b, high)| {
        let tie = if high {
            TieBreak::HighIdsFirst
        } else {
            TieBreak::LowIdsFirst
        };
        AlgorithmParams::new(a, b).unwrap().with_tie_break(tie)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generators_are_valid_and_pure(pairs in 1usize..8, kind in kind(), seed in any::<u64>(), eps in 0.0f64..0.1) {
        let a = generate_uniform(pairs, kind, 5.0, 3.0, seed).unwrap();
        prop_assert_eq!(&a, &generate_uniform(pairs, kind, 5.0, 3.0, seed).unwrap());
        prop_assert!(validate_metric(a.space(), DEFAULT_METRIC_TOL).is_valid());
        let s = generate_random_simultaneous(pairs, kind, 5.0, 1.0, seed).unwrap();
        prop_assert!(s.is_simultaneous());
        let j = jitter(&s, eps, seed).unwrap();
        prop_assert!(validate_metric(j.space(), DEFAULT_METRIC_TOL).is_valid());
        prop_assert_eq!(&j, &jitter(&s, eps, seed).unwrap());
    }

    #[test]
    fn online_run_is_earliest_and_fires_correctly(inst in instance(), params in params()) {
        let run = run_online(&inst, &params);
        prop_assert_eq!(run.matching.len(), inst.pairs());
        prop_assert!(verify_firing_conditions(&run.matching, &params, 1e-9).is_empty());
        prop_assert!(verify_earliest_action(&inst, &params, &run.matching, 1e-9).is_empty());
    }

    #[test]
    fn offline_costs_are_ordered(inst in instance(), params in params()) {
        let opt = opt_matching(&inst).unwrap().total();
        let greedy = greedy_matching(&inst).total();
        let run = run_online(&inst, &params);
        let tol = 1e-9 * run.matching.total().max(1.0);
        prop_assert!(opt <= greedy + tol);
        prop_assert!(opt <= run.matching.space_time_cost(&inst) + tol);
        prop_assert!(opt <= run.matching.total() + tol);
        prop_assert!(run.matching.space_time_cost(&inst) <= run.matching.total() + tol);
    }

    #[test]
    fn greedy_is_at_most_alg_pairing_when_simultaneous(pairs in 1usize..9, kind in kind(), seed in any::<u64>()) {
        let inst = jitter(&generate_random_simultaneous(pairs, kind, 10.0, 0.0, seed).unwrap(), 1e-4, seed).unwrap();
        let run = run_online(&inst, &AlgorithmParams::default());
        let greedy = greedy_matching(&inst).total();
        prop_assert!(greedy <= run.matching.space_time_cost(&inst) * (1.0 + 1e-12));
    }

    #[test]
    fn decomposition_shape(inst in instance(), params in params()) {
        let run = run_online(&inst, &params);
        let opt = opt_matching(&inst).unwrap();
        let d = decompose(&run.matching, &opt).unwrap();
        let m = inst.pairs();
        prop_assert_eq!(d.final_count(), d.cycles().len());
        prop_assert_eq!(d.non_final_count(), m - d.cycles().len());
        prop_assert_eq!(d.forest().leaf_count(), m);
        prop_assert_eq!(d.forest().internal_count(), d.non_final_count());
        prop_assert_eq!(d.forest().roots().len(), d.cycles().len());
        prop_assert!(d.forest().is_consistent(1e-12));
        for c in d.cycles() {
            prop_assert!(c.structure.closed && c.structure.is_alternating());
            let finals = c.structure.edges.iter().filter(|e| e.is_final).count();
            prop_assert_eq!(finals, 1);
            let root = d.forest().node(c.tree);
            prop_assert_eq!(root.leaf_count, c.opt_edges());
            let nf = c.structure.edges.iter().filter(|e| e.origin == EdgeOrigin::Alg && !e.is_final).count();
            prop_assert_eq!(d.forest().subtree(c.tree).len() - root.leaf_count, nf);
        }
        prop_assert!(d.paths_after(m).is_empty());
    }

    #[test]
    fn kappa_paths_match_endpoint_bookkeeping(inst in instance(), params in params()) {
        let run = run_online(&inst, &params);
        let opt = opt_matching(&inst).unwrap();
        let d = decompose(&run.matching, &opt).unwrap();
        for step in d.steps() {
            let paths = d.paths_after(step.seq - 1);
            for end in [step.at_i, step.at_j] {
                let path = paths
                    .iter()
                    .find(|p| {
                        let (a, b) = p.endpoints().unwrap();
                        a == end.endpoint || b == end.endpoint
                    })
                    .expect("endpoint of a maximal path");
                prop_assert!(path.is_alternating());
                let (a, b) = path.endpoints().unwrap();
                let far = if a == end.endpoint { b } else { a };
                prop_assert_eq!(far, end.far_end);
                prop_assert!((path.cost() - end.cost).abs() <= 1e-9 * path.cost().max(1.0));
                prop_assert!(check_path_triangle(&inst, path, CHECK_TOL).unwrap().ok());
            }
            let joins_one_path = step.at_i.far_end == step.at_j.endpoint;
            prop_assert_eq!(joins_one_path, step.kind == AlgEdgeKind::Final);
        }
    }

    #[test]
    fn scaled_weights_preserve_ratio(inst in instance(), params in params()) {
        let run = run_online(&inst, &params);
        let opt = opt_matching(&inst).unwrap();
        let d = decompose(&run.matching, &opt).unwrap();
        let forest = d.forest();
        for root in forest.roots() {
            let r = forest.node(root);
            if r.leaf_weight == 0.0 {
                continue;
            }
            let scale = r.leaf_count as f64 / r.leaf_weight;
            let nodes = forest.subtree(root);
            let ws_tree: f64 = nodes.iter().map(|&w| forest.node(w).weight * scale).sum();
            let ws_leaves: f64 = nodes
                .iter()
                .map(|&w| forest.node(w))
                .filter(|n| n.is_leaf())
                .map(|n| n.weight * scale)
                .sum();
            prop_assert!((ws_leaves - r.leaf_count as f64).abs() <= 1e-9 * r.leaf_count as f64);
            let lhs = ws_tree / ws_leaves;
            let rhs = r.subtree_weight / r.leaf_weight;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        }
    }

    #[test]
    fn every_checker_passes(inst in instance(), params in params(), seed in any::<u64>()) {
        let run = run_online(&inst, &params);
        let opt = opt_matching(&inst).unwrap();
        let options = AnalysisOptions { seed, ..AnalysisOptions::default() };
        let report = analyze(&inst, &params, &run.matching, &opt, OptMethod::Exact, &options).unwrap();
        prop_assert!(report.ok(), "{}", report.to_json_string());
        prop_assert!(report.ratio.is_none_or(|r| r >= 1.0 - CHECK_TOL && r <= report.theorem_bound));
        prop_assert!(report.cycles.iter().all(|c| c.ok()));
    }
}
