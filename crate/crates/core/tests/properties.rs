use proptest::prelude::*;

use labelcc::drivers::{HookSet, RunOptions};
use labelcc::graph::parse_edge_list;
use labelcc::oracle::{oracle_components, verify_final, verify_spanning_forest};
use labelcc::primitives::LoopMode;
use labelcc::{run, run_lockstep, AlgorithmKind, AlgorithmSpec, Graph, LockstepOutcome};

fn small_graph() -> impl Strategy<Value = Graph> {
    (2u32..40).prop_flat_map(|n| {
        proptest::collection::vec((1..=n, 1..=n), 1..80).prop_map(move |edges| Graph::new(n, edges).unwrap())
    })
}

fn every_hook(kind: AlgorithmKind) -> AlgorithmSpec {
    let spec = AlgorithmSpec::new(kind);
    if kind.uses_alter() {
        spec.with_loop_mode(LoopMode::RetainLoop)
    } else {
        spec
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn all_algorithms_label_components(g in small_graph(), seed in 0u64..4) {
        let truth = oracle_components(&g);
        for kind in AlgorithmKind::ALL {
            let spec = every_hook(kind).with_policy_seed(seed);
            let opts = RunOptions { hooks: HookSet::all(), ..RunOptions::default() };
            let trace = run(&spec, &g, &opts).map_err(|e| TestCaseError::fail(format!("{kind}: {e}")))?;
            prop_assert!(verify_final(&trace.final_forest, &g, kind.is_min_labeling()).is_ok(), "{kind}");
            for v in g.vertices() {
                let label = trace.final_forest.parent(v);
                prop_assert!(truth.same(v, label), "{kind}: {v} labeled {label}");
            }
        }
    }

    #[test]
    fn r_and_ra_record_spanning_forests(g in small_graph(), strengthened in any::<bool>()) {
        let mut ra = AlgorithmSpec::new(AlgorithmKind::RA).spanning_forest();
        ra.strengthened_deletion = strengthened;
        for spec in [AlgorithmSpec::new(AlgorithmKind::R).spanning_forest(), ra] {
            let trace = run(&spec, &g, &RunOptions::default()).unwrap();
            let ids = trace.spanning_forest.expect("recorded");
            prop_assert!(verify_spanning_forest(&g, &ids).is_ok());
        }
    }

    #[test]
    fn s_and_sa_make_identical_parent_changes(g in small_graph()) {
        let out = run_lockstep(&AlgorithmSpec::new(AlgorithmKind::S), &AlgorithmSpec::new(AlgorithmKind::SA), &g).unwrap();
        prop_assert!(out.is_equal(), "{out:?}");
    }

    #[test]
    fn s_and_r_reach_the_same_labeling(g in small_graph()) {
        let s = run(&AlgorithmSpec::new(AlgorithmKind::S), &g, &RunOptions::default()).unwrap();
        let r = run(&AlgorithmSpec::new(AlgorithmKind::R), &g, &RunOptions::default()).unwrap();
        prop_assert_eq!(s.final_forest.parents(), r.final_forest.parents());
    }
}

#[test]
fn r_and_ra_diverge_on_an_eight_vertex_path() {
    let g = parse_edge_list("1 2\n2 3\n3 5\n4 7\n5 6\n6 8\n7 8\n").unwrap();
    let out = run_lockstep(&AlgorithmSpec::new(AlgorithmKind::R), &AlgorithmSpec::new(AlgorithmKind::RA), &g).unwrap();
    match out {
        LockstepOutcome::Diverged { left: Some(l), vertex, left_parents, right_parents, .. } => {
            assert_eq!((l.round, vertex), (3, Some(4)));
            assert_eq!(left_parents[3], 2);
            assert_eq!(right_parents[3], 1);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
    // both still end at the minimum labeling
    let r = run(&AlgorithmSpec::new(AlgorithmKind::R), &g, &RunOptions::default()).unwrap();
    let ra = run(&AlgorithmSpec::new(AlgorithmKind::RA), &g, &RunOptions::default()).unwrap();
    assert_eq!(r.final_forest, ra.final_forest);
}

#[test]
fn traces_round_trip_through_json() {
    let g = parse_edge_list("1 2\n2 3\n3 4\n4 1\n5 6\n").unwrap();
    for kind in AlgorithmKind::ALL {
        let opts = RunOptions { instrument: true, snapshots: true, ..RunOptions::default() };
        let t = run(&AlgorithmSpec::new(kind), &g, &opts).unwrap();
        assert_eq!(labelcc::RunTrace::from_json(&t.to_json()).unwrap(), t, "{kind}");
    }
}
