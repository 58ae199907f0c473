//! Random instances and brute-force oracles for testing `iocompose-core`.
//!
//! The oracles only read the raw inputs (parent lists, service interfaces,
//! request) and recompute everything from scratch with the dumbest algorithm
//! that works.

use std::collections::{BTreeSet, VecDeque};

use iocompose_core::graph::{CompositionGraph, NodeId};
use iocompose_core::ontology::{ConceptId, MatchConfig, MatchDegree, Taxonomy};
use iocompose_core::registry::{Direction, DiscoveryConfig, Registry, Service, ServiceIdx};
use iocompose_core::search::Cost;
use iocompose_core::Request;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random DAG taxonomy on `n` concepts named `c0..`; each concept gets up to
/// `max_parents` parents among the earlier ones.
pub fn random_taxonomy(rng: &mut impl Rng, n: usize, max_parents: usize) -> Taxonomy {
    let mut b = Taxonomy::builder();
    for i in 0..n {
        let k = if i == 0 { 0 } else { rng.gen_range(0..=max_parents.min(i)) };
        let mut parents: Vec<String> = (0..i).collect::<Vec<_>>().choose_multiple(rng, k).map(|p| format!("c{p}")).collect();
        parents.sort();
        b.add_concept(&format!("c{i}"), parents.iter().map(String::as_str)).expect("fresh concept");
    }
    b.build().expect("parents always precede children")
}

pub fn random_concepts(rng: &mut impl Rng, taxonomy: &Taxonomy, max: usize) -> Vec<ConceptId> {
    let k = rng.gen_range(0..=max.min(taxonomy.len()));
    let mut all: Vec<ConceptId> = taxonomy.concepts().collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

pub fn random_services(
    rng: &mut impl Rng,
    taxonomy: &Taxonomy,
    n: usize,
    max_inputs: usize,
    max_outputs: usize,
) -> Vec<Service> {
    (0..n)
        .map(|i| {
            let ins = random_concepts(rng, taxonomy, max_inputs);
            let mut outs = random_concepts(rng, taxonomy, max_outputs);
            if outs.is_empty() {
                outs.push(ConceptId::from_index(rng.gen_range(0..taxonomy.len())));
            }
            Service::new(format!("s{i}"), ins, outs)
        })
        .collect()
}

pub fn registry(taxonomy: Taxonomy, services: &[Service], config: DiscoveryConfig) -> Registry {
    let mut b = Registry::builder(taxonomy, config);
    for s in services {
        b.add(s.clone()).expect("generated services are well formed");
    }
    b.build()
}

/// Parameters of a random composition instance.
#[derive(Debug, Clone, Copy)]
pub struct InstanceShape {
    pub concepts: usize,
    pub max_parents: usize,
    pub services: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
    pub request_inputs: usize,
    pub request_outputs: usize,
    /// When non-zero, concepts are split into this many tiers; services read
    /// from lower tiers and write to their own, the request starts at the
    /// bottom tier and asks for the top one.
    pub tiers: usize,
}

impl InstanceShape {
    pub const fn small(services: usize) -> Self {
        InstanceShape {
            concepts: 36,
            max_parents: 1,
            services,
            max_inputs: 3,
            max_outputs: 2,
            request_inputs: 3,
            request_outputs: 3,
            tiers: 0,
        }
    }

    pub const fn tiered(services: usize) -> Self {
        InstanceShape {
            concepts: 30,
            max_parents: 1,
            services,
            max_inputs: 3,
            max_outputs: 3,
            request_inputs: 3,
            request_outputs: 2,
            tiers: 5,
        }
    }
}

pub struct Instance {
    pub registry: Registry,
    pub request: Request,
}

pub fn random_instance(rng: &mut impl Rng, shape: InstanceShape, config: DiscoveryConfig) -> Instance {
    if shape.tiers > 0 {
        return tiered_instance(rng, shape, config);
    }
    let taxonomy = random_taxonomy(rng, shape.concepts, shape.max_parents);
    let services = random_services(rng, &taxonomy, shape.services, shape.max_inputs, shape.max_outputs);
    let inputs = random_concepts(rng, &taxonomy, shape.request_inputs);
    let mut outputs = random_concepts(rng, &taxonomy, shape.request_outputs);
    if outputs.is_empty() {
        outputs.push(ConceptId::from_index(rng.gen_range(0..taxonomy.len())));
    }
    let request = Request::new(inputs, outputs).expect("goal is non-empty");
    Instance { registry: registry(taxonomy, &services, config), request }
}

fn tiered_instance(rng: &mut impl Rng, shape: InstanceShape, config: DiscoveryConfig) -> Instance {
    let taxonomy = random_taxonomy(rng, shape.concepts, shape.max_parents);
    let per = shape.concepts.div_ceil(shape.tiers);
    let tier: Vec<Vec<ConceptId>> = (0..shape.tiers)
        .map(|t| (t * per..((t + 1) * per).min(shape.concepts)).map(ConceptId::from_index).collect())
        .collect();
    let pick = |rng: &mut dyn rand::RngCore, from: &[ConceptId], max: usize, min: usize| -> Vec<ConceptId> {
        let k = rng.gen_range(min..=max.max(min)).min(from.len());
        from.choose_multiple(rng, k).copied().collect()
    };
    let services: Vec<Service> = (0..shape.services)
        .map(|i| {
            let t = rng.gen_range(1..shape.tiers);
            let mut ins = pick(rng, &tier[t - 1], shape.max_inputs.min(2), 1);
            if t > 1 && rng.gen_bool(0.5) {
                let lower = rng.gen_range(0..t - 1);
                ins.extend(pick(rng, &tier[lower], 1, 1));
            }
            let outs = pick(rng, &tier[t], shape.max_outputs, 1);
            Service::new(format!("s{i}"), ins, outs)
        })
        .collect();
    let inputs = pick(rng, &tier[0], shape.request_inputs, 1);
    let outputs = pick(rng, &tier[shape.tiers - 1], shape.request_outputs, 1);
    let request = Request::new(inputs, outputs).expect("goal is non-empty");
    Instance { registry: registry(taxonomy, &services, config), request }
}

/// Draws instances until one is solvable according to [`forward_chaining`]
/// and needs at least one service.
pub fn solvable_instance(rng: &mut impl Rng, shape: InstanceShape, config: DiscoveryConfig) -> Instance {
    loop {
        let inst = random_instance(rng, shape, config);
        let chain = forward_chaining(&inst.registry, &inst.request, None);
        if chain.solved && !chain.layers.is_empty() {
            return inst;
        }
    }
}

/// Match degree by walking the parent lists breadth-first.
pub fn oracle_degree(taxonomy: &Taxonomy, source: ConceptId, target: ConceptId) -> MatchDegree {
    let above = |from: ConceptId, to: ConceptId| {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            if c == to {
                return true;
            }
            for &p in taxonomy.parents(c) {
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        false
    };
    if source == target {
        MatchDegree::Exact
    } else if above(source, target) {
        MatchDegree::Plugin
    } else if above(target, source) {
        MatchDegree::Subsume
    } else {
        MatchDegree::Fail
    }
}

pub fn oracle_cmatch(taxonomy: &Taxonomy, cfg: MatchConfig, source: ConceptId, target: ConceptId) -> bool {
    match oracle_degree(taxonomy, source, target) {
        MatchDegree::Exact | MatchDegree::Plugin => true,
        MatchDegree::Subsume => cfg.allow_subsume,
        MatchDegree::Fail => false,
    }
}

/// All-pairs double loop.
pub fn oracle_match_sets(taxonomy: &Taxonomy, cfg: MatchConfig, source: &[ConceptId], target: &[ConceptId]) -> Vec<ConceptId> {
    let mut out = Vec::new();
    for &t in target {
        let mut hit = false;
        for &s in source {
            if oracle_cmatch(taxonomy, cfg, s, t) {
                hit = true;
            }
        }
        if hit {
            out.push(t);
        }
    }
    out
}

pub fn oracle_relevant(registry: &Registry, concepts: &[ConceptId], dir: Direction) -> Vec<ServiceIdx> {
    let t = registry.taxonomy();
    let cfg = registry.matching();
    (0..registry.len())
        .map(ServiceIdx::from_index)
        .filter(|&w| {
            let s = registry.service(w);
            match dir {
                Direction::In => !oracle_match_sets(t, cfg, concepts, &s.inputs).is_empty(),
                Direction::Out => !oracle_match_sets(t, cfg, &s.outputs, concepts).is_empty(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chaining {
    pub solved: bool,
    /// Service ids fired in each round.
    pub layers: Vec<Vec<String>>,
    pub available: BTreeSet<ConceptId>,
}

/// Forward-chaining fixpoint: each round fires every unfired service whose
/// inputs are all matched by what is available, stopping as soon as the
/// goals are matched. `allowed` restricts the services that may fire.
pub fn forward_chaining(registry: &Registry, request: &Request, allowed: Option<&BTreeSet<usize>>) -> Chaining {
    let t = registry.taxonomy();
    let cfg = registry.matching();
    let mut available: BTreeSet<ConceptId> = request.inputs.iter().copied().collect();
    let mut fired = vec![false; registry.len()];
    let mut layers = Vec::new();
    loop {
        let have: Vec<ConceptId> = available.iter().copied().collect();
        if oracle_match_sets(t, cfg, &have, &request.outputs).len() == request.outputs.len() {
            return Chaining { solved: true, layers, available };
        }
        let round: Vec<usize> = (0..registry.len())
            .filter(|&i| !fired[i] && allowed.is_none_or(|a| a.contains(&i)))
            .filter(|&i| {
                let ins = &registry.services()[i].inputs;
                oracle_match_sets(t, cfg, &have, ins).len() == ins.len()
            })
            .collect();
        if round.is_empty() {
            return Chaining { solved: false, layers, available };
        }
        let mut ids = Vec::new();
        for i in round {
            fired[i] = true;
            let s = &registry.services()[i];
            available.extend(s.outputs.iter().copied());
            ids.push(s.id.clone());
        }
        ids.sort();
        layers.push(ids);
    }
}

/// Nodes of `graph` from which the sink is reachable along raw
/// output-to-input matches, recomputed with the taxonomy oracle.
pub fn oracle_reverse_reachable(graph: &CompositionGraph, taxonomy: &Taxonomy, cfg: MatchConfig) -> BTreeSet<NodeId> {
    let feeds = |a: NodeId, b: NodeId| {
        let outs = &graph.node(a).outputs;
        graph.node(b).inputs.iter().any(|&i| outs.iter().any(|&o| oracle_cmatch(taxonomy, cfg, o, i)))
    };
    let sink = graph.sink().expect("graph has a sink");
    let mut seen = BTreeSet::new();
    let mut stack = vec![sink];
    while let Some(b) = stack.pop() {
        for a in graph.node_ids() {
            if feeds(a, b) && seen.insert(a) {
                stack.push(a);
            }
        }
    }
    seen
}

/// Smallest number of rounds after which the goals are matched when only the
/// services in `allowed` may fire, if they ever are.
pub fn asap_depth(registry: &Registry, request: &Request, allowed: Option<&BTreeSet<usize>>) -> Option<usize> {
    let c = forward_chaining(registry, request, allowed);
    c.solved.then_some(c.layers.len())
}

/// Optimal (length, services) cost by enumeration: the minimum length is the
/// unrestricted ASAP depth, then subsets of the reachable services are tried
/// by increasing size.
pub fn exhaustive_optimum(registry: &Registry, request: &Request) -> Option<Cost> {
    let full = forward_chaining(registry, request, None);
    if !full.solved {
        return None;
    }
    let length = full.layers.len();
    let pool: Vec<usize> = full
        .layers
        .iter()
        .flatten()
        .map(|id| registry.find(id).expect("fired service exists").index())
        .collect();
    for size in 0..=pool.len() {
        let mut found = false;
        for_each_subset(&pool, size, &mut |subset| {
            if !found {
                let allowed: BTreeSet<usize> = subset.iter().copied().collect();
                if asap_depth(registry, request, Some(&allowed)).is_some_and(|d| d <= length) {
                    found = true;
                }
            }
        });
        if found {
            return Some(Cost { length, services: size });
        }
    }
    unreachable!("the full pool reaches the goals")
}

fn for_each_subset(pool: &[usize], size: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(pool: &[usize], start: usize, size: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if cur.len() == size {
            visit(cur);
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < size - cur.len() {
                break;
            }
            cur.push(pool[i]);
            go(pool, i + 1, size, cur, visit);
            cur.pop();
        }
    }
    go(pool, 0, size, &mut Vec::new(), visit);
}

/// Parents of every concept of the bookstore example.
pub const BOOKSTORE_TAXONOMY: &[(&str, &[&str])] = &[
    ("Thing", &[]),
    ("BookTitle", &["Thing"]),
    ("BookAuthor", &["Thing"]),
    ("CreditCard", &["Thing"]),
    ("Email", &["Thing"]),
    ("Address", &["Thing"]),
    ("ISBN", &["Thing"]),
    ("ISBN13", &["ISBN"]),
    ("UserID", &["Thing"]),
    ("MovieInfo", &["Thing"]),
    ("GeoCoordinates", &["Thing"]),
    ("Price", &["Thing"]),
    ("BookingCode", &["Thing"]),
    ("Payment", &["Thing"]),
    ("PaymentID", &["Payment"]),
    ("PayNum", &["Payment"]),
];

pub const BOOKSTORE_SERVICES: &[(&str, &[&str], &[&str])] = &[
    ("w1", &["BookTitle"], &["ISBN"]),
    ("w2", &["BookAuthor"], &["ISBN13"]),
    ("w3", &["Email"], &["UserID"]),
    ("w4", &["BookTitle"], &["MovieInfo"]),
    ("w5", &["Address"], &["GeoCoordinates"]),
    ("w6", &["ISBN", "CreditCard", "UserID"], &["Price", "BookingCode"]),
    ("w7", &["ISBN"], &["Price"]),
    ("w8", &["UserID", "Address"], &["PaymentID"]),
    ("w9", &["CreditCard", "ISBN"], &["PayNum"]),
];

pub const BOOKSTORE_INPUTS: &[&str] = &["BookTitle", "BookAuthor", "CreditCard", "Email", "Address"];
pub const BOOKSTORE_OUTPUTS: &[&str] = &["Price", "Payment", "BookingCode"];

pub fn bookstore_taxonomy() -> Taxonomy {
    let mut b = Taxonomy::builder();
    for (c, parents) in BOOKSTORE_TAXONOMY {
        b.add_concept(c, parents.iter().copied()).expect("fixture concept");
    }
    b.build().expect("fixture taxonomy")
}

pub fn bookstore(config: DiscoveryConfig) -> Instance {
    let mut b = Registry::builder(bookstore_taxonomy(), config);
    for (id, ins, outs) in BOOKSTORE_SERVICES {
        b.add_named(id, ins, outs).expect("fixture service");
    }
    let registry = b.build();
    let request = Request::named(registry.taxonomy(), BOOKSTORE_INPUTS, BOOKSTORE_OUTPUTS).expect("fixture request");
    Instance { registry, request }
}

/// Ids of a node set, sorted.
pub fn ids(graph: &CompositionGraph, nodes: impl IntoIterator<Item = NodeId>) -> Vec<String> {
    let mut v: Vec<String> = nodes.into_iter().map(|n| graph.node(n).id.clone()).collect();
    v.sort();
    v
}
