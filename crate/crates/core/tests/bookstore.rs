use iocompose_core::graph::{fwd_graph, graph_stats, SINK_ID, SOURCE_ID};
use iocompose_core::optimize::{
    backward_closure, backward_prune, dominance_reduce, expand_composition, input_dominant, input_equivalent,
    output_equivalent, output_relevant_set, phi,
};
use iocompose_core::search::{astar, Cost, Heuristic, SearchOptions};
use iocompose_core::validate::is_valid;
use iocompose_core::{CompositionGraph, DiscoveryConfig, DiscoveryMode};
use iocompose_testkit::{bookstore, ids, Instance};

fn graph() -> (Instance, CompositionGraph) {
    let inst = bookstore(DiscoveryConfig::default());
    let build = fwd_graph(&inst.request, &inst.registry).unwrap();
    assert!(build.outcome.is_solved());
    let g = build.outcome.into_graph();
    (inst, g)
}

fn layer_ids(g: &CompositionGraph) -> Vec<Vec<String>> {
    g.layers().iter().map(|l| ids(g, l.iter().copied())).collect()
}

#[test]
fn layers_match_the_worked_example() {
    let (inst, g) = graph();
    assert_eq!(
        layer_ids(&g),
        vec![
            vec![SOURCE_ID.to_string()],
            vec!["w1", "w2", "w3", "w4", "w5"].into_iter().map(String::from).collect(),
            vec!["w6", "w7", "w8", "w9"].into_iter().map(String::from).collect(),
            vec![SINK_ID.to_string()],
        ]
    );
    let stats = graph_stats(&g, &inst.registry, None);
    assert_eq!((stats.layer_count, stats.service_count), (4, 11));
}

#[test]
fn layers_agree_across_modes() {
    let (_, reference) = graph();
    for mode in DiscoveryMode::ALL {
        let inst = bookstore(DiscoveryConfig::with_mode(mode));
        let g = fwd_graph(&inst.request, &inst.registry).unwrap().outcome.into_graph();
        assert_eq!(layer_ids(&g), layer_ids(&reference), "{mode}");
    }
}

#[test]
fn payment_providers() {
    let (inst, g) = graph();
    let payment = inst.registry.taxonomy().lookup("Payment").unwrap();
    assert_eq!(ids(&g, phi(&g, payment).iter().copied()), ["w8", "w9"]);
}

#[test]
fn sink_output_relevant_set() {
    let (_, g) = graph();
    let x = output_relevant_set(&g, g.sink().unwrap());
    assert_eq!(ids(&g, x), ["w6", "w7", "w8", "w9"]);
}

#[test]
fn pruning_removes_w4_and_w5() {
    let (_, g) = graph();
    let closure = backward_closure(&g).unwrap();
    assert_eq!(ids(&g, closure), [SOURCE_ID, "w1", "w2", "w3", "w6", "w7", "w8", "w9"]);
    let pruned = backward_prune(&g).unwrap();
    assert_eq!(pruned.removed, ["w4", "w5"]);
}

#[test]
fn w7_is_input_dominant_over_w6() {
    let (_, g) = graph();
    let w6 = g.find("w6").unwrap();
    let w7 = g.find("w7").unwrap();
    assert!(input_dominant(&g, w7, w6));
    assert!(!input_dominant(&g, w6, w7));
}

#[test]
fn w1_and_w2_are_interface_equivalent() {
    let (_, g) = graph();
    let w1 = g.find("w1").unwrap();
    let w2 = g.find("w2").unwrap();
    assert!(input_equivalent(&g, w1, w2) && output_equivalent(&g, w1, w2));
    let reduced = dominance_reduce(&backward_prune(&g).unwrap().graph);
    let group = reduced.interfaces.iter().find(|i| i.representative == "w1").unwrap();
    assert_eq!(group.members, ["w1", "w2"]);
    assert!(reduced.graph.find("w2").is_err());
}

#[test]
fn optimal_composition() {
    let (inst, g) = graph();
    let opts = SearchOptions { heuristic: Heuristic::Depth, beam: None };
    let direct = astar(&g, opts).unwrap().composition.unwrap();
    assert_eq!(direct.cost, Cost { length: 2, services: 4 });

    let reduced = dominance_reduce(&backward_prune(&g).unwrap().graph);
    let comp = astar(&reduced.graph, opts).unwrap().composition.unwrap();
    let comp = expand_composition(&comp, &reduced.interfaces).unwrap();
    assert_eq!(comp.cost, direct.cost);
    // Both payment providers lead to a (2, 4) plan.
    let last = &comp.levels[1];
    assert!(last == &["w6", "w8"] || last == &["w6", "w9"], "{last:?}");
    assert!(is_valid(&comp, &inst.request, &inst.registry).unwrap().valid);
}
