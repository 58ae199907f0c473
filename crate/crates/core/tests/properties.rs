use std::collections::BTreeSet;

use iocompose_core::graph::{fwd_graph, NodeRole};
use iocompose_core::ontology::{MatchConfig, Matchmaker, WalkingMatcher};
use iocompose_core::optimize::{backward_closure, backward_prune, dominance_reduce, expand_composition, interface_dominates};
use iocompose_core::registry::Direction;
use iocompose_core::search::{astar, Composition, Heuristic, SearchOptions};
use iocompose_core::validate::is_valid;
use iocompose_core::{DiscoveryConfig, DiscoveryMode};
use iocompose_testkit as kit;
use proptest::prelude::*;

fn config(allow_subsume: bool) -> DiscoveryConfig {
    DiscoveryConfig { matching: MatchConfig { allow_subsume }, ..DiscoveryConfig::default() }
}

fn shape(tiered: bool, services: usize) -> kit::InstanceShape {
    if tiered {
        kit::InstanceShape::tiered(services)
    } else {
        kit::InstanceShape::small(services)
    }
}

fn exact() -> SearchOptions {
    SearchOptions { heuristic: Heuristic::Depth, beam: None }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degrees_agree_with_parent_walk(seed: u64, n in 1usize..30) {
        let t = kit::random_taxonomy(&mut kit::rng(seed), n, 3);
        let walker = WalkingMatcher::new(&t);
        for a in t.concepts() {
            for b in t.concepts() {
                let want = kit::oracle_degree(&t, a, b);
                prop_assert_eq!(t.degree(a, b), want);
                prop_assert_eq!(walker.degree(a, b), want);
            }
        }
    }

    #[test]
    fn match_sets_agree_with_double_loop(seed: u64, subsume: bool) {
        let mut rng = kit::rng(seed);
        let t = kit::random_taxonomy(&mut rng, 30, 3);
        let cfg = MatchConfig { allow_subsume: subsume };
        let a = kit::random_concepts(&mut rng, &t, 8);
        let b = kit::random_concepts(&mut rng, &t, 8);
        prop_assert_eq!(t.match_sets(&a, &b, cfg), kit::oracle_match_sets(&t, cfg, &a, &b));
        prop_assert_eq!(t.is_full_match(&a, &b, cfg), kit::oracle_match_sets(&t, cfg, &a, &b).len() == b.len());
    }

    #[test]
    fn discovery_modes_agree(seed: u64, subsume: bool) {
        let mut rng = kit::rng(seed);
        let t = kit::random_taxonomy(&mut rng, 30, 2);
        let services = kit::random_services(&mut rng, &t, 40, 3, 3);
        let queries: Vec<_> = (0..10).map(|_| kit::random_concepts(&mut rng, &t, 4)).collect();
        let mut reference = None;
        for mode in DiscoveryMode::ALL {
            let cfg = DiscoveryConfig { mode, ..config(subsume) };
            let r = kit::registry(t.clone(), &services, cfg);
            let mut answers = Vec::new();
            for q in &queries {
                for dir in [Direction::In, Direction::Out] {
                    let got = r.relevant_io(q, dir);
                    prop_assert_eq!(&got, &kit::oracle_relevant(&r, q, dir));
                    answers.push(got);
                }
            }
            if mode == DiscoveryMode::FullIndexed {
                prop_assert_eq!(r.stats().backend_calls, 0);
            }
            match &reference {
                None => reference = Some(answers),
                Some(a) => prop_assert_eq!(a, &answers),
            }
        }
    }

    #[test]
    fn graph_layers_follow_forward_chaining(seed: u64, subsume: bool, tiered: bool) {
        let inst = kit::random_instance(&mut kit::rng(seed), shape(tiered, 30), config(subsume));
        let (r, req) = (&inst.registry, &inst.request);
        let chain = kit::forward_chaining(r, req, None);
        let build = fwd_graph(req, r).unwrap();
        prop_assert_eq!(build.outcome.is_solved(), chain.solved);
        let g = build.outcome.graph();
        let layers: Vec<Vec<String>> = g.layers()[1..g.layers().len() - 1]
            .iter()
            .map(|l| kit::ids(g, l.iter().copied()))
            .collect();
        prop_assert_eq!(&layers, &chain.layers);

        let t = r.taxonomy();
        let cfg = r.matching();
        let mut available = req.inputs.clone();
        for layer in &g.layers()[1..g.layers().len() - 1] {
            for &n in layer {
                let ins = &g.node(n).inputs;
                prop_assert_eq!(kit::oracle_match_sets(t, cfg, &available, ins).len(), ins.len());
            }
            for &n in layer {
                available.extend(g.node(n).outputs.iter().copied());
            }
        }
        for &(o, i) in g.cc_edges() {
            prop_assert!(kit::oracle_cmatch(t, cfg, o, i));
        }
    }

    #[test]
    fn pruning_keeps_exactly_the_reverse_reachable_nodes(seed: u64, tiered: bool) {
        let inst = kit::solvable_instance(&mut kit::rng(seed), shape(tiered, 20), DiscoveryConfig::default());
        let g = fwd_graph(&inst.request, &inst.registry).unwrap().outcome.into_graph();
        let oracle = kit::oracle_reverse_reachable(&g, inst.registry.taxonomy(), inst.registry.matching());
        prop_assert_eq!(&backward_closure(&g).unwrap(), &oracle);
        let pruned = backward_prune(&g).unwrap();
        let mut kept: BTreeSet<String> = kit::ids(&g, oracle).into_iter().collect();
        kept.insert(g.node(g.sink().unwrap()).id.clone());
        let got: BTreeSet<String> = pruned.graph.nodes().iter().map(|n| n.id.clone()).collect();
        prop_assert_eq!(got, kept);
        let before = astar(&g, exact()).unwrap().composition.unwrap().cost;
        let after = astar(&pruned.graph, exact()).unwrap().composition.unwrap().cost;
        prop_assert_eq!(before, after);
    }

    #[test]
    fn dominance_is_a_strict_order_and_keeps_the_optimum(seed: u64, subsume: bool, tiered: bool) {
        let inst = kit::solvable_instance(&mut kit::rng(seed), shape(tiered, 20), config(subsume));
        let g = backward_prune(&fwd_graph(&inst.request, &inst.registry).unwrap().outcome.into_graph()).unwrap().graph;
        let real: Vec<_> = g.node_ids().filter(|&n| matches!(g.node(n).role, NodeRole::Service(_))).collect();
        for &a in &real {
            prop_assert!(!interface_dominates(&g, a, a));
            for &b in &real {
                prop_assert!(!(interface_dominates(&g, a, b) && interface_dominates(&g, b, a)));
            }
        }
        let reduced = dominance_reduce(&g);
        prop_assert!(reduced.diagnostics.is_empty());
        let before = astar(&g, exact()).unwrap().composition.unwrap();
        let after = astar(&reduced.graph, exact()).unwrap().composition.unwrap();
        prop_assert_eq!(before.cost, after.cost);
        let expanded = expand_composition(&after, &reduced.interfaces).unwrap();
        prop_assert!(is_valid(&expanded, &inst.request, &inst.registry).unwrap().valid);
    }

    #[test]
    fn astar_matches_exhaustive_optimum(seed: u64, subsume: bool, tiered: bool) {
        let inst = kit::solvable_instance(&mut kit::rng(seed), shape(tiered, 14), config(subsume));
        let g = fwd_graph(&inst.request, &inst.registry).unwrap().outcome.into_graph();
        let want = kit::exhaustive_optimum(&inst.registry, &inst.request);
        for heuristic in [Heuristic::Zero, Heuristic::Depth] {
            let got = astar(&g, SearchOptions { heuristic, beam: None }).unwrap().composition.map(|c| c.cost);
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn optimal_compositions_are_valid_and_minimal(seed: u64, tiered: bool) {
        let inst = kit::solvable_instance(&mut kit::rng(seed), shape(tiered, 16), DiscoveryConfig::default());
        let g = fwd_graph(&inst.request, &inst.registry).unwrap().outcome.into_graph();
        let comp = astar(&g, exact()).unwrap().composition.unwrap();
        prop_assert!(is_valid(&comp, &inst.request, &inst.registry).unwrap().valid);
        let all: Vec<String> = comp.services().map(String::from).collect();
        for drop in &all {
            let levels: Vec<Vec<String>> = comp
                .levels
                .iter()
                .map(|l| l.iter().filter(|s| *s != drop).cloned().collect())
                .collect();
            let precedence = comp.precedence.iter().filter(|(a, b)| a != drop && b != drop).cloned().collect();
            let smaller = Composition { levels, precedence, cost: comp.cost };
            prop_assert!(!is_valid(&smaller, &inst.request, &inst.registry).unwrap().valid, "{} is redundant", drop);
        }
    }
}
