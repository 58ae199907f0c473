//! Layered composition graph and its forward construction.
//!
//! Vertices are services (graph nodes) and concepts. Concept vertices are
//! concept tokens, so a concept produced by several services is a single
//! vertex. Edges come in three kinds: `CW` (input concept to consuming
//! service), `WC` (service to output concept) and `CC` (output concept to an
//! input concept it compatibly matches). Layer 0 holds the source dummy that
//! provides the request inputs; the last layer holds the sink dummy that
//! consumes the goal outputs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use crate::error::{Error, Result};
use crate::ontology::{ConceptId, MatchConfig, Taxonomy};
use crate::registry::{sorted_set, Direction, QueryCounts, Registry, ServiceIdx};

/// Id of the dummy service providing the request inputs.
pub const SOURCE_ID: &str = "#source";
/// Id of the dummy service consuming the goal outputs.
pub const SINK_ID: &str = "#sink";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub inputs: Vec<ConceptId>,
    pub outputs: Vec<ConceptId>,
}

impl Request {
    pub fn new<I, O>(inputs: I, outputs: O) -> Result<Self>
    where
        I: IntoIterator<Item = ConceptId>,
        O: IntoIterator<Item = ConceptId>,
    {
        let outputs = sorted_set(outputs);
        if outputs.is_empty() {
            return Err(Error::EmptyGoal);
        }
        Ok(Request { inputs: sorted_set(inputs), outputs })
    }

    pub fn named(taxonomy: &Taxonomy, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        Request::new(
            taxonomy.lookup_all(inputs.iter().copied())?,
            taxonomy.lookup_all(outputs.iter().copied())?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRole {
    Source,
    Sink,
    Service(ServiceIdx),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: String,
    pub role: NodeRole,
    pub inputs: Vec<ConceptId>,
    pub outputs: Vec<ConceptId>,
}

impl GraphNode {
    pub fn is_dummy(&self) -> bool {
        !matches!(self.role, NodeRole::Service(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn from_index(index: usize) -> Self {
        NodeId(index as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Edge<'g> {
    /// Input concept to the service consuming it.
    Cw(ConceptId, &'g str),
    /// Service to an output concept.
    Wc(&'g str, ConceptId),
    /// Output concept to an input concept it matches.
    Cc(ConceptId, ConceptId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionGraph {
    nodes: Vec<GraphNode>,
    layers: Vec<Vec<NodeId>>,
    layer_of: Vec<usize>,
    concepts: BTreeSet<ConceptId>,
    cc: BTreeSet<(ConceptId, ConceptId)>,
    producers: BTreeMap<ConceptId, Vec<NodeId>>,
    consumers: BTreeMap<ConceptId, Vec<NodeId>>,
    providers: BTreeMap<ConceptId, Vec<NodeId>>,
    ids: BTreeMap<String, NodeId>,
    source: Option<NodeId>,
    sink: Option<NodeId>,
}

impl CompositionGraph {
    /// Builds a graph over `nodes` placed in `layers`, deriving the `CC`
    /// edges from the taxonomy.
    pub fn from_layers(nodes: Vec<GraphNode>, layers: Vec<Vec<NodeId>>, taxonomy: &Taxonomy, cfg: MatchConfig) -> Self {
        let inputs: BTreeSet<ConceptId> = nodes.iter().flat_map(|n| n.inputs.iter().copied()).collect();
        let outputs: BTreeSet<ConceptId> = nodes.iter().flat_map(|n| n.outputs.iter().copied()).collect();
        let mut cc = BTreeSet::new();
        for &o in &outputs {
            for t in taxonomy.compatible_targets(o, cfg) {
                if inputs.contains(&t) {
                    cc.insert((o, t));
                }
            }
        }
        Self::assemble(nodes, layers, cc)
    }

    fn assemble(nodes: Vec<GraphNode>, layers: Vec<Vec<NodeId>>, cc: BTreeSet<(ConceptId, ConceptId)>) -> Self {
        let mut layer_of = vec![usize::MAX; nodes.len()];
        for (i, layer) in layers.iter().enumerate() {
            for n in layer {
                layer_of[n.index()] = i;
            }
        }
        let mut concepts = BTreeSet::new();
        let mut producers: BTreeMap<ConceptId, Vec<NodeId>> = BTreeMap::new();
        let mut consumers: BTreeMap<ConceptId, Vec<NodeId>> = BTreeMap::new();
        let mut ids = BTreeMap::new();
        let mut source = None;
        let mut sink = None;
        for (i, node) in nodes.iter().enumerate() {
            let id = NodeId::from_index(i);
            ids.insert(node.id.clone(), id);
            match node.role {
                NodeRole::Source => source = Some(id),
                NodeRole::Sink => sink = Some(id),
                NodeRole::Service(_) => {}
            }
            for &c in &node.inputs {
                concepts.insert(c);
                consumers.entry(c).or_default().push(id);
            }
            for &c in &node.outputs {
                concepts.insert(c);
                producers.entry(c).or_default().push(id);
            }
        }
        let mut providers: BTreeMap<ConceptId, Vec<NodeId>> = BTreeMap::new();
        for &(o, i) in &cc {
            let list = providers.entry(i).or_default();
            list.extend_from_slice(&producers[&o]);
        }
        for list in providers.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        CompositionGraph {
            nodes,
            layers,
            layer_of,
            concepts,
            cc,
            producers,
            consumers,
            providers,
            ids,
            source,
            sink,
        }
    }

    /// A copy keeping only the nodes accepted by `keep`. Edges touching
    /// removed nodes and concepts no longer attached to any node go with
    /// them; empty layers are dropped.
    pub fn retain(&self, mut keep: impl FnMut(NodeId, &GraphNode) -> bool) -> Self {
        let mut remap = vec![None; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if keep(NodeId::from_index(i), node) {
                remap[i] = Some(NodeId::from_index(nodes.len()));
                nodes.push(node.clone());
            }
        }
        let layers: Vec<Vec<NodeId>> = self
            .layers
            .iter()
            .map(|l| l.iter().filter_map(|n| remap[n.index()]).collect::<Vec<_>>())
            .filter(|l: &Vec<NodeId>| !l.is_empty())
            .collect();
        let outputs: BTreeSet<ConceptId> = nodes.iter().flat_map(|n| n.outputs.iter().copied()).collect();
        let inputs: BTreeSet<ConceptId> = nodes.iter().flat_map(|n| n.inputs.iter().copied()).collect();
        let cc = self
            .cc
            .iter()
            .filter(|(o, i)| outputs.contains(o) && inputs.contains(i))
            .copied()
            .collect();
        Self::assemble(nodes, layers, cc)
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &GraphNode {
        &self.nodes[id.index()]
    }

    pub fn node_ids(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId::from_index)
    }

    pub fn find(&self, id: &str) -> Result<NodeId> {
        self.ids
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownGraphService(id.to_string()))
    }

    pub fn layers(&self) -> &[Vec<NodeId>] {
        &self.layers
    }

    pub fn layer_of(&self, id: NodeId) -> usize {
        self.layer_of[id.index()]
    }

    pub fn source(&self) -> Option<NodeId> {
        self.source
    }

    pub fn sink(&self) -> Option<NodeId> {
        self.sink
    }

    pub fn concepts(&self) -> &BTreeSet<ConceptId> {
        &self.concepts
    }

    pub fn has_concept(&self, c: ConceptId) -> bool {
        self.concepts.contains(&c)
    }

    pub fn cc_edges(&self) -> &BTreeSet<(ConceptId, ConceptId)> {
        &self.cc
    }

    pub fn has_cc(&self, output: ConceptId, input: ConceptId) -> bool {
        self.cc.contains(&(output, input))
    }

    /// Input concepts matched by `c` (targets of its `CC` edges).
    pub fn matched_inputs(&self, c: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        self.cc
            .range((c, ConceptId::from_index(0))..=(c, ConceptId::from_index(u32::MAX as usize)))
            .map(|&(_, i)| i)
    }

    /// Nodes with an output whose `CC` edge reaches `c`.
    pub fn providers(&self, c: ConceptId) -> &[NodeId] {
        self.providers.get(&c).map_or(&[], Vec::as_slice)
    }

    /// Nodes listing `c` among their outputs.
    pub fn producers(&self, c: ConceptId) -> &[NodeId] {
        self.producers.get(&c).map_or(&[], Vec::as_slice)
    }

    /// Nodes listing `c` among their inputs.
    pub fn consumers(&self, c: ConceptId) -> &[NodeId] {
        self.consumers.get(&c).map_or(&[], Vec::as_slice)
    }

    /// Node count, dummies included.
    pub fn service_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node count without the dummies.
    pub fn regular_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_dummy()).count()
    }

    pub fn edge_count(&self) -> usize {
        let cw: usize = self.nodes.iter().map(|n| n.inputs.len()).sum();
        let wc: usize = self.nodes.iter().map(|n| n.outputs.len()).sum();
        cw + wc + self.cc.len()
    }

    /// Every edge, grouped by kind, in a stable order.
    pub fn edges(&self) -> Vec<Edge<'_>> {
        let mut out = Vec::with_capacity(self.edge_count());
        let mut cw: Vec<Edge<'_>> = self
            .nodes
            .iter()
            .flat_map(|n| n.inputs.iter().map(move |&c| Edge::Cw(c, n.id.as_str())))
            .collect();
        cw.sort();
        let mut wc: Vec<Edge<'_>> = self
            .nodes
            .iter()
            .flat_map(|n| n.outputs.iter().map(move |&c| Edge::Wc(n.id.as_str(), c)))
            .collect();
        wc.sort();
        out.extend(cw);
        out.extend(wc);
        out.extend(self.cc.iter().map(|&(a, b)| Edge::Cc(a, b)));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphOutcome {
    Solved(CompositionGraph),
    /// The goals are unreachable; the graph holds the layers built so far.
    Unsolvable(CompositionGraph),
}

impl GraphOutcome {
    pub fn graph(&self) -> &CompositionGraph {
        match self {
            GraphOutcome::Solved(g) | GraphOutcome::Unsolvable(g) => g,
        }
    }

    pub fn into_graph(self) -> CompositionGraph {
        match self {
            GraphOutcome::Solved(g) | GraphOutcome::Unsolvable(g) => g,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, GraphOutcome::Solved(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphBuild {
    pub outcome: GraphOutcome,
    /// Size of the relevant-service set returned at each layer.
    pub relevant_per_layer: Vec<usize>,
    /// Registry work done while building.
    pub counts: QueryCounts,
}

/// Forward, layer-by-layer graph generation.
///
/// Each service keeps the set of its inputs not matched yet. At every layer
/// the concepts that became available in the previous layer are sent to
/// input discovery; the relevant services match them against their pending
/// inputs and those left with nothing pending form the new layer. Goals are
/// tracked the same way. Generation stops once no goal is pending, or when a
/// layer comes out empty.
pub fn fwd_graph(request: &Request, registry: &Registry) -> Result<GraphBuild> {
    let taxonomy = registry.taxonomy();
    if request.outputs.is_empty() {
        return Err(Error::EmptyGoal);
    }
    if let Some(bad) = request.inputs.iter().chain(&request.outputs).find(|c| c.index() >= taxonomy.len()) {
        return Err(Error::UnknownConcept(alloc::format!("#{}", bad.index())));
    }
    let before = registry.stats();
    let n = registry.len();
    let mut remaining = vec![true; n];
    let mut unmatched: Vec<Option<Vec<ConceptId>>> = vec![None; n];
    let mut known: BTreeSet<ConceptId> = request.inputs.iter().copied().collect();
    let mut frontier: Vec<ConceptId> = request.inputs.clone();
    let mut layers: Vec<Vec<ServiceIdx>> = Vec::new();
    let mut relevant_per_layer = Vec::new();

    let mut pending_goals = request.outputs.clone();

    let solved = loop {
        let reached = registry.match_sets(&frontier, &pending_goals);
        pending_goals.retain(|c| !reached.contains(c));
        if pending_goals.is_empty() {
            break true;
        }
        let relevant = registry.relevant_io_among(&frontier, Direction::In, &remaining);
        relevant_per_layer.push(relevant.len());
        let mut selected = Vec::new();
        for w in relevant {
            let pending = unmatched[w.index()].get_or_insert_with(|| registry.service(w).inputs.clone());
            let matched = registry.match_sets(&frontier, pending);
            pending.retain(|c| !matched.contains(c));
            if pending.is_empty() {
                selected.push(w);
            }
        }
        if layers.is_empty() {
            selected.extend(registry.sourceless().iter().copied().filter(|w| remaining[w.index()]));
            selected.sort_unstable();
            selected.dedup();
        }
        if selected.is_empty() {
            break false;
        }
        let mut fresh = Vec::new();
        for &w in &selected {
            remaining[w.index()] = false;
            for &o in &registry.service(w).outputs {
                if known.insert(o) {
                    fresh.push(o);
                }
            }
        }
        fresh.sort_unstable();
        frontier = fresh;
        layers.push(selected);
    };

    let graph = assemble_layers(request, registry, &layers);
    let counts = registry.stats() - before;
    let outcome = if solved { GraphOutcome::Solved(graph) } else { GraphOutcome::Unsolvable(graph) };
    Ok(GraphBuild { outcome, relevant_per_layer, counts })
}

fn assemble_layers(request: &Request, registry: &Registry, service_layers: &[Vec<ServiceIdx>]) -> CompositionGraph {
    let mut nodes = vec![GraphNode {
        id: SOURCE_ID.to_string(),
        role: NodeRole::Source,
        inputs: Vec::new(),
        outputs: request.inputs.clone(),
    }];
    let mut layers = vec![vec![NodeId::from_index(0)]];
    for layer in service_layers {
        let mut ids = Vec::with_capacity(layer.len());
        for &w in layer {
            let s = registry.service(w);
            ids.push(NodeId::from_index(nodes.len()));
            nodes.push(GraphNode {
                id: s.id.clone(),
                role: NodeRole::Service(w),
                inputs: s.inputs.clone(),
                outputs: s.outputs.clone(),
            });
        }
        layers.push(ids);
    }
    layers.push(vec![NodeId::from_index(nodes.len())]);
    nodes.push(GraphNode {
        id: SINK_ID.to_string(),
        role: NodeRole::Sink,
        inputs: request.outputs.clone(),
        outputs: Vec::new(),
    });
    CompositionGraph::from_layers(nodes, layers, registry.taxonomy(), registry.matching())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub layer_count: usize,
    pub service_count: usize,
    pub edge_count: usize,
    pub generation_time: Option<Duration>,
    pub backend_calls: u64,
}

/// Size summary of `graph`. The backend-call figure is the registry's
/// current counter; the timing is whatever the caller measured.
pub fn graph_stats(graph: &CompositionGraph, registry: &Registry, generation_time: Option<Duration>) -> GraphStats {
    GraphStats {
        layer_count: graph.layers().len(),
        service_count: graph.service_count(),
        edge_count: graph.edge_count(),
        generation_time,
        backend_calls: registry.stats().backend_calls,
    }
}
