//! Graph reduction: backward pruning and interface dominance.
//!
//! `phi(c)` is the set of nodes providing concept `c` (nodes with an output
//! that has a `CC` edge to `c`); `psi(c)` is the set of input concepts that
//! `c` matches. A node's input family collects `phi` over its inputs and its
//! output union collects `psi` over its outputs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{CompositionGraph, NodeId};
use crate::ontology::ConceptId;
use crate::search::Composition;

pub fn phi(graph: &CompositionGraph, c: ConceptId) -> &[NodeId] {
    graph.providers(c)
}

pub fn psi(graph: &CompositionGraph, c: ConceptId) -> BTreeSet<ConceptId> {
    graph.matched_inputs(c).collect()
}

/// Nodes that provide at least one input of `node`.
pub fn output_relevant_set(graph: &CompositionGraph, node: NodeId) -> BTreeSet<NodeId> {
    graph
        .node(node)
        .inputs
        .iter()
        .flat_map(|&c| graph.providers(c).iter().copied())
        .collect()
}

/// Every node from which the sink can be reached through provider links,
/// the sink excluded unless it provides itself.
pub fn backward_closure(graph: &CompositionGraph) -> Result<BTreeSet<NodeId>> {
    let sink = graph.sink().ok_or(Error::MissingSink)?;
    let mut closure = BTreeSet::new();
    let mut stack = alloc::vec![sink];
    while let Some(n) = stack.pop() {
        for p in output_relevant_set(graph, n) {
            if closure.insert(p) {
                stack.push(p);
            }
        }
    }
    Ok(closure)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub graph: CompositionGraph,
    /// Ids of the removed nodes, in graph order.
    pub removed: Vec<String>,
}

/// Drops every node that cannot contribute to the goals.
pub fn backward_prune(graph: &CompositionGraph) -> Result<Pruned> {
    let closure = backward_closure(graph)?;
    let sink = graph.sink();
    let mut removed = Vec::new();
    let pruned = graph.retain(|id, node| {
        let keep = closure.contains(&id) || Some(id) == sink;
        if !keep {
            removed.push(node.id.clone());
        }
        keep
    });
    Ok(Pruned { graph: pruned, removed })
}

pub type InputFamily = BTreeSet<Vec<NodeId>>;

pub fn input_family(graph: &CompositionGraph, node: NodeId) -> InputFamily {
    graph
        .node(node)
        .inputs
        .iter()
        .map(|&c| graph.providers(c).to_vec())
        .collect()
}

pub fn output_union(graph: &CompositionGraph, node: NodeId) -> BTreeSet<ConceptId> {
    graph
        .node(node)
        .outputs
        .iter()
        .flat_map(|&c| graph.matched_inputs(c))
        .collect()
}

pub fn input_equivalent(graph: &CompositionGraph, a: NodeId, b: NodeId) -> bool {
    input_family(graph, a) == input_family(graph, b)
}

pub fn output_equivalent(graph: &CompositionGraph, a: NodeId, b: NodeId) -> bool {
    output_union(graph, a) == output_union(graph, b)
}

/// `a` needs no provider set that `b` does not also need.
pub fn input_dominant(graph: &CompositionGraph, a: NodeId, b: NodeId) -> bool {
    input_family(graph, a).is_subset(&input_family(graph, b))
}

/// `a` feeds every input that `b` feeds.
pub fn output_dominant(graph: &CompositionGraph, a: NodeId, b: NodeId) -> bool {
    output_union(graph, a).is_superset(&output_union(graph, b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Interface {
    family: InputFamily,
    outputs: BTreeSet<ConceptId>,
}

impl Interface {
    fn of(graph: &CompositionGraph, node: NodeId) -> Self {
        Interface { family: input_family(graph, node), outputs: output_union(graph, node) }
    }

    fn dominates(&self, other: &Interface) -> bool {
        self.family.is_subset(&other.family) && self.outputs.is_superset(&other.outputs) && self != other
    }
}

/// Strict interface dominance: `a` is input- and output-dominant over `b`
/// and the two are not interface-equivalent.
pub fn interface_dominates(graph: &CompositionGraph, a: NodeId, b: NodeId) -> bool {
    Interface::of(graph, a).dominates(&Interface::of(graph, b))
}

/// A group of interface-equivalent services standing behind one
/// representative in a reduced graph.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct AbstractInterface {
    pub representative: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub graph: CompositionGraph,
    pub interfaces: Vec<AbstractInterface>,
    /// Ids of dominated services that were removed.
    pub dominated: Vec<String>,
    pub diagnostics: Vec<String>,
}

/// Collapses interface-equivalent services onto one representative (the
/// smallest id) and removes representatives dominated by another one.
/// Dummies are left alone.
pub fn dominance_reduce(graph: &CompositionGraph) -> Reduction {
    let mut groups: BTreeMap<(InputFamily, BTreeSet<ConceptId>), Vec<NodeId>> = BTreeMap::new();
    for id in graph.node_ids() {
        if graph.node(id).is_dummy() {
            continue;
        }
        let Interface { family, outputs } = Interface::of(graph, id);
        groups.entry((family, outputs)).or_default().push(id);
    }

    let mut reps: Vec<(NodeId, Interface, Vec<NodeId>)> = groups
        .into_iter()
        .map(|((family, outputs), members)| {
            let rep = *members
                .iter()
                .min_by(|&&a, &&b| graph.node(a).id.cmp(&graph.node(b).id))
                .expect("groups are never empty");
            (rep, Interface { family, outputs }, members)
        })
        .collect();
    reps.sort_by(|a, b| graph.node(a.0).id.cmp(&graph.node(b.0).id));

    let mut diagnostics = Vec::new();
    let mut dominated_reps = BTreeSet::new();
    for (i, (a, ia, _)) in reps.iter().enumerate() {
        for (b, ib, _) in reps.iter().skip(i + 1) {
            let ab = ia.dominates(ib);
            let ba = ib.dominates(ia);
            if ab && ba {
                diagnostics.push(format!(
                    "`{}` and `{}` dominate each other; both kept",
                    graph.node(*a).id,
                    graph.node(*b).id
                ));
                continue;
            }
            if ab {
                dominated_reps.insert(*b);
            } else if ba {
                dominated_reps.insert(*a);
            }
        }
    }

    let mut keep = BTreeSet::new();
    let mut interfaces = Vec::new();
    let mut dominated = Vec::new();
    for (rep, _, members) in &reps {
        let mut names: Vec<String> = members.iter().map(|&m| graph.node(m).id.clone()).collect();
        names.sort();
        if dominated_reps.contains(rep) {
            dominated.extend(names);
            continue;
        }
        keep.insert(*rep);
        interfaces.push(AbstractInterface { representative: graph.node(*rep).id.clone(), members: names });
    }
    dominated.sort();
    let reduced = graph.retain(|id, node| node.is_dummy() || keep.contains(&id));
    Reduction { graph: reduced, interfaces, dominated, diagnostics }
}

/// Replaces every representative in `composition` by a concrete member of its
/// interface. Services without an interface are kept as they are.
pub fn expand_composition(composition: &Composition, interfaces: &[AbstractInterface]) -> Result<Composition> {
    let by_rep: BTreeMap<&str, &AbstractInterface> =
        interfaces.iter().map(|i| (i.representative.as_str(), i)).collect();
    let resolve = |id: &String| -> Result<String> {
        match by_rep.get(id.as_str()) {
            None => Ok(id.clone()),
            Some(i) => i.members.iter().min().cloned().ok_or_else(|| Error::EmptyInterface(id.clone())),
        }
    };
    let mut levels = Vec::with_capacity(composition.levels.len());
    for level in &composition.levels {
        let mut ids = level.iter().map(resolve).collect::<Result<Vec<_>>>()?;
        ids.sort();
        levels.push(ids);
    }
    let mut precedence = composition
        .precedence
        .iter()
        .map(|(a, b)| Ok((resolve(a)?, resolve(b)?)))
        .collect::<Result<Vec<_>>>()?;
    precedence.sort();
    Ok(Composition { levels, precedence, cost: composition.cost })
}
