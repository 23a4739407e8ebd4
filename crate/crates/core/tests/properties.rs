mod common;

use std::collections::BTreeSet;

use atcg_core::fixtures;
use atcg_core::ingest::parse_design_model;
use atcg_core::netgen::{compile_model, NetgenOptions};
use atcg_core::petri::{enabled, fire, reach_graph, test_tree, Bounds, Marking, VertexKind};
use atcg_core::pnml::{read_pnml, write_pnml};
use atcg_core::testgen::{format_model_tests, scenarios};
use atcg_core::testkit::random_net_seeded;
use common::oracle;
use proptest::prelude::*;

fn bounds(depth: usize) -> Bounds {
    Bounds {
        max_depth: depth,
        max_states: 1_000_000,
        loop_unroll: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pnml_round_trip(seed in any::<u64>()) {
        let net = random_net_seeded(seed);
        let bytes = write_pnml(&net);
        let back = read_pnml(&bytes).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(write_pnml(&back), bytes);
    }

    #[test]
    fn reach_graph_matches_brute_force(seed in any::<u64>()) {
        let net = random_net_seeded(seed);
        let g = reach_graph(&net, &bounds(6));
        let ours: Vec<_> = g.states.iter().map(oracle::state_of).collect::<BTreeSet<_>>().into_iter().collect();
        prop_assert_eq!(ours, oracle::reachable(&net, 6));
    }

    #[test]
    fn every_enabled_pair_fires(seed in any::<u64>()) {
        let net = random_net_seeded(seed);
        let g = reach_graph(&net, &bounds(4));
        for m in &g.states {
            let en = enabled(&net, m);
            let mut sorted = en.clone();
            sorted.sort_by(|a, b| atcg_core::petri::cmp_ids(&a.0, &b.0).then_with(|| a.1.cmp(&b.1)));
            prop_assert_eq!(&en, &sorted);
            for (t, b) in en {
                prop_assert!(fire(&net, m, &t, &b).is_ok());
            }
        }
    }

    #[test]
    fn scenarios_replay_and_are_prefix_closed(seed in any::<u64>()) {
        let net = random_net_seeded(seed);
        let tree = test_tree(&net, &bounds(5));
        let suite = scenarios(&tree, &net);
        prop_assert_eq!(suite.scenarios.len(), tree.vertices.len() - 1);
        let paths: BTreeSet<Vec<(String, _)>> = suite
            .scenarios
            .iter()
            .map(|s| s.firings.iter().map(|f| (f.transition.clone(), f.binding.clone())).collect())
            .collect();
        for s in &suite.scenarios {
            let mut m = Marking::initial(&net);
            for f in &s.firings {
                m = fire(&net, &m, &f.transition, &f.binding).unwrap();
            }
            prop_assert_eq!(&m, &tree.vertices[s.vertex].marking);
            let path: Vec<_> = s.firings.iter().map(|f| (f.transition.clone(), f.binding.clone())).collect();
            for k in 1..path.len() {
                prop_assert!(paths.contains(&path[..k]));
            }
        }
    }

    #[test]
    fn tree_leaves_are_classified(seed in any::<u64>()) {
        let net = random_net_seeded(seed);
        let tree = test_tree(&net, &bounds(5));
        for (v, vx) in tree.vertices.iter().enumerate().skip(1) {
            let ancestors: Vec<&Marking> = {
                let mut out = Vec::new();
                let mut cur = vx.parent;
                while let Some(p) = cur {
                    out.push(&tree.vertices[p].marking);
                    cur = tree.vertices[p].parent;
                }
                out
            };
            let repeats = ancestors.contains(&&vx.marking);
            match vx.kind {
                VertexKind::RoundTrip => prop_assert!(repeats),
                VertexKind::Dead => prop_assert!(enabled(&net, &vx.marking).is_empty()),
                VertexKind::DepthLimit => prop_assert_eq!(vx.depth, 5),
                VertexKind::Interior => prop_assert!(!repeats && !vx.children.is_empty(), "vertex {}", v),
            }
        }
    }
}

#[test]
fn data_places_are_conserved_along_every_scenario() {
    for (_, src) in fixtures::MODELS {
        let model = parse_design_model(src.as_bytes()).unwrap();
        let net = compile_model(&model, NetgenOptions::default()).unwrap();
        let data: Vec<&str> = net
            .places
            .iter()
            .filter(|p| p.position.y == 300)
            .map(|p| p.id.as_str())
            .collect();
        let tree = test_tree(&net, &Bounds::default());
        let root = &tree.vertices[0].marking;
        for vx in &tree.vertices {
            for d in &data {
                assert_eq!(
                    vx.marking.tokens(d).collect::<Vec<_>>(),
                    root.tokens(d).collect::<Vec<_>>()
                );
            }
        }
    }
}

#[test]
fn pipeline_is_deterministic() {
    for (_, src) in fixtures::MODELS {
        let run = || {
            let model = parse_design_model(src.as_bytes()).unwrap();
            let net = compile_model(&model, NetgenOptions::default()).unwrap();
            let tree = test_tree(&net, &Bounds::default());
            (write_pnml(&net), format_model_tests(&scenarios(&tree, &net), false))
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn written_nets_read_back_identically() {
    for (_, src) in fixtures::MODELS {
        let model = parse_design_model(src.as_bytes()).unwrap();
        let net = compile_model(&model, NetgenOptions::default()).unwrap();
        assert_eq!(read_pnml(&write_pnml(&net)).unwrap(), net);
    }
}

#[test]
fn coffee_graph_has_nine_states_and_eleven_edges() {
    let net = read_pnml(fixtures::COFFEE_NET.as_bytes()).unwrap();
    let g = reach_graph(&net, &Bounds::default());
    assert_eq!((g.states.len(), g.edges.len()), (9, 11));
    assert!(!g.truncated);
    assert_eq!(oracle::reachable(&net, 20).len(), 9);
}
