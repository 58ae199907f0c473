//! Backward A* over a composition graph.
//!
//! A search state is the set of concepts still to be provided, starting from
//! the goal concepts. An action picks, for every concept of the state, a
//! provider; the next state is the union of the inputs of the chosen
//! services. Concepts the request already provides are resolved by the source
//! at no cost. Cost is the pair (plan length, distinct services), compared
//! lexicographically. Because a service chosen twice is only paid once, nodes
//! are keyed by both the state and the services selected so far.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::ops::Add;

use crate::error::{Error, Result};
use crate::graph::{CompositionGraph, NodeId};
use crate::ontology::ConceptId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct Cost {
    pub length: usize,
    pub services: usize,
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        Cost { length: self.length + rhs.length, services: self.services + rhs.services }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Heuristic {
    /// Plain uniform-cost search.
    Zero,
    /// Largest provider depth among the pending concepts.
    #[default]
    Depth,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchOptions {
    pub heuristic: Heuristic,
    /// Keep only this many successors per expansion. Makes the search
    /// inexact; `None` keeps all of them.
    pub beam: Option<usize>,
}

/// Services per execution level, with the data dependencies between levels.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Composition {
    pub levels: Vec<Vec<String>>,
    /// `(a, b)`: `a` runs at an earlier level and feeds an input of `b`.
    pub precedence: Vec<(String, String)>,
    pub cost: Cost,
}

impl Composition {
    pub fn services(&self) -> impl Iterator<Item = &str> {
        self.levels.iter().flatten().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub composition: Option<Composition>,
    pub expanded: usize,
    pub generated: usize,
}

pub type State = Vec<ConceptId>;

/// One backward step: the services chosen (the source included when it
/// resolves something) and the state they leave behind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Action {
    pub services: Vec<NodeId>,
    pub next: State,
}

pub fn initial_state(graph: &CompositionGraph) -> Result<State> {
    let sink = graph.sink().ok_or(Error::MissingSink)?;
    Ok(graph.node(sink).inputs.clone())
}

/// The state left after running `services`: the union of their inputs.
pub fn gamma(graph: &CompositionGraph, services: &[NodeId]) -> State {
    let set: BTreeSet<ConceptId> = services.iter().flat_map(|&s| graph.node(s).inputs.iter().copied()).collect();
    set.into_iter().collect()
}

fn real_providers(graph: &CompositionGraph, c: ConceptId) -> Vec<NodeId> {
    graph.providers(c).iter().copied().filter(|&n| !graph.node(n).is_dummy()).collect()
}

/// Applicable actions from `state`, before dominance filtering.
pub fn actions(graph: &CompositionGraph, state: &[ConceptId]) -> Vec<Action> {
    let source = graph.source();
    let mut pending: Vec<Vec<NodeId>> = Vec::new();
    let mut uses_source = false;
    for &c in state {
        if source.is_some_and(|s| graph.providers(c).contains(&s)) {
            uses_source = true;
        } else {
            let p = real_providers(graph, c);
            if p.is_empty() {
                return Vec::new();
            }
            pending.push(p);
        }
    }
    let mut sets = BTreeSet::new();
    minimal_hitting_sets(&pending, &mut Vec::new(), &mut sets);
    sets.into_iter()
        .map(|mut services| {
            let next = gamma(graph, &services);
            if uses_source {
                services.extend(source);
                services.sort_unstable();
            }
            Action { services, next }
        })
        .collect()
}

fn minimal_hitting_sets(pending: &[Vec<NodeId>], chosen: &mut Vec<NodeId>, out: &mut BTreeSet<Vec<NodeId>>) {
    let open = pending.iter().filter(|p| !p.iter().any(|n| chosen.contains(n))).min_by_key(|p| p.len());
    match open {
        None => {
            let minimal = chosen.iter().all(|w| {
                pending.iter().any(|p| p.contains(w) && p.iter().filter(|n| chosen.contains(n)).count() == 1)
            });
            if minimal {
                let mut set = chosen.clone();
                set.sort_unstable();
                out.insert(set);
            }
        }
        Some(p) => {
            for &w in p {
                chosen.push(w);
                minimal_hitting_sets(pending, chosen, out);
                chosen.pop();
            }
        }
    }
}

/// Successors of a search node with their step costs. An action is dropped
/// when another one leaves a subset of its pending concepts while selecting a
/// subset of its services.
pub fn successors(
    graph: &CompositionGraph,
    state: &[ConceptId],
    selected: &[NodeId],
) -> Vec<(Action, Vec<NodeId>, Cost)> {
    let mut cands: Vec<(Action, Vec<NodeId>, Cost)> = actions(graph, state)
        .into_iter()
        .map(|a| {
            let real: Vec<NodeId> = a.services.iter().copied().filter(|&n| !graph.node(n).is_dummy()).collect();
            let fresh = real.iter().filter(|n| selected.binary_search(n).is_err()).count();
            let mut sel: Vec<NodeId> = selected.iter().copied().chain(real.iter().copied()).collect();
            sel.sort_unstable();
            sel.dedup();
            let cost = Cost { length: usize::from(!real.is_empty()), services: fresh };
            (a, sel, cost)
        })
        .collect();
    cands.sort_by(|a, b| (a.2, &a.0).cmp(&(b.2, &b.0)));
    let mut kept: Vec<(Action, Vec<NodeId>, Cost)> = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        let beaten = cands.iter().enumerate().any(|(j, d)| {
            j != i
                && d.2.length <= c.2.length
                && is_subset(&d.0.next, &c.0.next)
                && is_subset(&d.1, &c.1)
                && (d.0.next != c.0.next || d.1 != c.1 || j < i)
        });
        if !beaten {
            kept.push(c.clone());
        }
    }
    kept
}

fn is_subset<T: Ord>(a: &[T], b: &[T]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Minimum number of real steps needed to provide each concept of the graph.
/// Concepts that cannot be provided are absent.
pub fn provider_depths(graph: &CompositionGraph) -> BTreeMap<ConceptId, usize> {
    let source = graph.source();
    let mut depth: BTreeMap<ConceptId, usize> = BTreeMap::new();
    for &c in graph.concepts() {
        if source.is_some_and(|s| graph.providers(c).contains(&s)) {
            depth.insert(c, 0);
        }
    }
    loop {
        let mut changed = false;
        for &c in graph.concepts() {
            let best = real_providers(graph, c)
                .into_iter()
                .filter_map(|w| {
                    graph
                        .node(w)
                        .inputs
                        .iter()
                        .try_fold(0usize, |m, i| depth.get(i).map(|&d| m.max(d)))
                        .map(|m| m + 1)
                })
                .min();
            if let Some(b) = best {
                if depth.get(&c).is_none_or(|&d| b < d) {
                    depth.insert(c, b);
                    changed = true;
                }
            }
        }
        if !changed {
            return depth;
        }
    }
}

/// Estimated remaining cost of `state`, or `None` when some concept can never
/// be provided.
pub fn heuristic(kind: Heuristic, depths: &BTreeMap<ConceptId, usize>, state: &[ConceptId]) -> Option<Cost> {
    let mut length = 0;
    for c in state {
        let d = *depths.get(c)?;
        length = length.max(d);
    }
    Some(match kind {
        Heuristic::Zero => Cost::default(),
        Heuristic::Depth => Cost { length, services: 0 },
    })
}

struct Node {
    state: State,
    selected: Vec<NodeId>,
    g: Cost,
    parent: Option<(usize, Vec<NodeId>)>,
}

/// Shortest composition with the fewest services for the sink's goals.
pub fn astar(graph: &CompositionGraph, options: SearchOptions) -> Result<SearchOutcome> {
    let start = initial_state(graph)?;
    let depths = provider_depths(graph);
    let mut nodes: Vec<Node> = Vec::new();
    let mut best_g: BTreeMap<(State, Vec<NodeId>), Cost> = BTreeMap::new();
    let mut open = BinaryHeap::new();
    let mut expanded = 0;
    let mut generated = 1;

    let Some(h0) = heuristic(options.heuristic, &depths, &start) else {
        return Ok(SearchOutcome { composition: None, expanded, generated });
    };
    best_g.insert((start.clone(), Vec::new()), Cost::default());
    nodes.push(Node { state: start, selected: Vec::new(), g: Cost::default(), parent: None });
    open.push(Reverse((h0, 0usize)));

    while let Some(Reverse((_, idx))) = open.pop() {
        let (g, stale) = {
            let n = &nodes[idx];
            let key_best = best_g[&(n.state.clone(), n.selected.clone())];
            (n.g, key_best < n.g)
        };
        if stale {
            continue;
        }
        if nodes[idx].state.is_empty() {
            let composition = build_composition(graph, &nodes, idx);
            return Ok(SearchOutcome { composition: Some(composition), expanded, generated });
        }
        expanded += 1;
        let mut succ: Vec<(Cost, usize)> = Vec::new();
        let state = nodes[idx].state.clone();
        let selected = nodes[idx].selected.clone();
        for (action, sel, step) in successors(graph, &state, &selected) {
            let Some(h) = heuristic(options.heuristic, &depths, &action.next) else { continue };
            let g2 = g + step;
            let key = (action.next.clone(), sel.clone());
            if best_g.get(&key).is_some_and(|&b| b <= g2) {
                continue;
            }
            best_g.insert(key, g2);
            let id = nodes.len();
            nodes.push(Node { state: action.next, selected: sel, g: g2, parent: Some((idx, action.services)) });
            succ.push((g2 + h, id));
        }
        if let Some(beam) = options.beam {
            succ.sort();
            succ.truncate(beam);
        }
        generated += succ.len();
        for (f, id) in succ {
            open.push(Reverse((f, id)));
        }
    }
    Ok(SearchOutcome { composition: None, expanded, generated })
}

fn build_composition(graph: &CompositionGraph, nodes: &[Node], goal: usize) -> Composition {
    // The last search step resolves the deepest concepts, so walking back
    // from the goal node yields steps in execution order.
    let mut steps: Vec<Vec<NodeId>> = Vec::new();
    let mut cur = goal;
    while let Some((parent, services)) = &nodes[cur].parent {
        let real: Vec<NodeId> = services.iter().copied().filter(|&n| !graph.node(n).is_dummy()).collect();
        if !real.is_empty() {
            steps.push(real);
        }
        cur = *parent;
    }

    let mut level_of: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (i, step) in steps.iter().enumerate() {
        for &w in step {
            level_of.entry(w).or_insert(i);
        }
    }
    let mut grouped: Vec<Vec<NodeId>> = vec![Vec::new(); steps.len()];
    for (&w, &l) in &level_of {
        grouped[l].push(w);
    }
    grouped.retain(|l| !l.is_empty());
    let level_of: BTreeMap<NodeId, usize> =
        grouped.iter().enumerate().flat_map(|(i, l)| l.iter().map(move |&w| (w, i))).collect();

    let mut precedence = Vec::new();
    for (&a, &la) in &level_of {
        for (&b, &lb) in &level_of {
            if la < lb && feeds(graph, a, b) {
                precedence.push((graph.node(a).id.clone(), graph.node(b).id.clone()));
            }
        }
    }
    precedence.sort();
    let levels: Vec<Vec<String>> = grouped
        .iter()
        .map(|l| {
            let mut ids: Vec<String> = l.iter().map(|&w| graph.node(w).id.clone()).collect();
            ids.sort();
            ids
        })
        .collect();
    let cost = Cost { length: levels.len(), services: level_of.len() };
    Composition { levels, precedence, cost }
}

fn feeds(graph: &CompositionGraph, a: NodeId, b: NodeId) -> bool {
    let ins = &graph.node(b).inputs;
    graph.node(a).outputs.iter().any(|&o| ins.iter().any(|&i| graph.has_cc(o, i)))
}
