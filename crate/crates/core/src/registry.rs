//! Service registry with fine-grained input/output discovery.
//!
//! Three discovery configurations share one contract and differ only in the
//! work they account for:
//!
//! * [`DiscoveryMode::Scan`]: every relevance query scans the candidate
//!   services and answers each concept pair with an on-demand taxonomy walk.
//!   Every per-service check is one backend call.
//! * [`DiscoveryMode::IndexedDiscoveryCachedMatch`]: relevance comes from the
//!   inverted indexes; concept matching still goes to the backend but each
//!   distinct concept pair is fetched only once and then served from a cache.
//! * [`DiscoveryMode::FullIndexed`]: indexes plus the precomputed closure. No
//!   backend calls at all.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use core::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{self, check_token, ConceptId, MatchConfig, MatchDegree, Matchmaker, Taxonomy, WalkingMatcher};

/// A service signature `{inputs, outputs}`. Both sides are kept sorted and
/// free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Service {
    pub id: String,
    pub inputs: Vec<ConceptId>,
    pub outputs: Vec<ConceptId>,
}

impl Service {
    pub fn new<I, O>(id: impl Into<String>, inputs: I, outputs: O) -> Self
    where
        I: IntoIterator<Item = ConceptId>,
        O: IntoIterator<Item = ConceptId>,
    {
        Service {
            id: id.into(),
            inputs: sorted_set(inputs),
            outputs: sorted_set(outputs),
        }
    }
}

pub(crate) fn sorted_set<I: IntoIterator<Item = ConceptId>>(it: I) -> Vec<ConceptId> {
    let mut v: Vec<ConceptId> = it.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServiceIdx(u32);

impl ServiceIdx {
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn from_index(index: usize) -> Self {
        ServiceIdx(index as u32)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscoveryMode {
    Scan,
    #[serde(rename = "indexed")]
    IndexedDiscoveryCachedMatch,
    #[default]
    #[serde(rename = "full")]
    FullIndexed,
}

impl DiscoveryMode {
    pub const ALL: [DiscoveryMode; 3] = [
        DiscoveryMode::Scan,
        DiscoveryMode::IndexedDiscoveryCachedMatch,
        DiscoveryMode::FullIndexed,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            DiscoveryMode::Scan => "scan",
            DiscoveryMode::IndexedDiscoveryCachedMatch => "indexed",
            DiscoveryMode::FullIndexed => "full",
        }
    }

    const fn uses_index(self) -> bool {
        !matches!(self, DiscoveryMode::Scan)
    }
}

impl fmt::Display for DiscoveryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscoveryMode {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.trim() {
            "scan" => Ok(DiscoveryMode::Scan),
            "indexed" => Ok(DiscoveryMode::IndexedDiscoveryCachedMatch),
            "full" => Ok(DiscoveryMode::FullIndexed),
            other => Err(alloc::format!("unknown discovery mode `{other}` (expected scan, indexed or full)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiscoveryConfig {
    pub mode: DiscoveryMode,
    /// Simulated delay per backend call, in milliseconds. Applied through the
    /// registry's backend hook.
    pub backend_latency_ms: u64,
    pub matching: MatchConfig,
}

impl DiscoveryConfig {
    pub fn with_mode(mode: DiscoveryMode) -> Self {
        DiscoveryConfig { mode, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// Counters of the matchmaking work done by a registry.
#[derive(Debug, Default)]
pub struct QueryStats {
    backend_calls: AtomicU64,
    discovery_calls: AtomicU64,
    match_calls: AtomicU64,
}

impl QueryStats {
    pub fn snapshot(&self) -> QueryCounts {
        QueryCounts {
            backend_calls: self.backend_calls.load(Ordering::Relaxed),
            discovery_calls: self.discovery_calls.load(Ordering::Relaxed),
            match_calls: self.match_calls.load(Ordering::Relaxed),
        }
    }

    fn reset(&self) {
        self.backend_calls.store(0, Ordering::Relaxed);
        self.discovery_calls.store(0, Ordering::Relaxed);
        self.match_calls.store(0, Ordering::Relaxed);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub backend_calls: u64,
    pub discovery_calls: u64,
    pub match_calls: u64,
}

impl core::ops::Sub for QueryCounts {
    type Output = QueryCounts;

    fn sub(self, rhs: QueryCounts) -> QueryCounts {
        QueryCounts {
            backend_calls: self.backend_calls - rhs.backend_calls,
            discovery_calls: self.discovery_calls - rhs.discovery_calls,
            match_calls: self.match_calls - rhs.match_calls,
        }
    }
}

/// Concept-keyed inverted indexes over a service set.
///
/// `inputs[c]` holds the services with an input compatibly matched by `c`;
/// `outputs[c]` the services with an output compatibly matching `c`. Every
/// taxonomy concept has an entry, possibly empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IoIndex {
    inputs: Vec<Vec<ServiceIdx>>,
    outputs: Vec<Vec<ServiceIdx>>,
    entries: u64,
}

impl IoIndex {
    pub fn build(taxonomy: &Taxonomy, services: &[Service], cfg: MatchConfig) -> Self {
        let n = taxonomy.len();
        let mut inputs: Vec<Vec<ServiceIdx>> = vec![Vec::new(); n];
        let mut outputs: Vec<Vec<ServiceIdx>> = vec![Vec::new(); n];
        for (i, s) in services.iter().enumerate() {
            let idx = ServiceIdx::from_index(i);
            for &input in &s.inputs {
                for c in taxonomy.compatible_sources(input, cfg) {
                    inputs[c.index()].push(idx);
                }
            }
            for &output in &s.outputs {
                for c in taxonomy.compatible_targets(output, cfg) {
                    outputs[c.index()].push(idx);
                }
            }
        }
        let mut entries = 0;
        for list in inputs.iter_mut().chain(outputs.iter_mut()) {
            list.dedup();
            entries += list.len() as u64;
        }
        IoIndex { inputs, outputs, entries }
    }

    pub fn input_relevant(&self, c: ConceptId) -> &[ServiceIdx] {
        &self.inputs[c.index()]
    }

    pub fn output_relevant(&self, c: ConceptId) -> &[ServiceIdx] {
        &self.outputs[c.index()]
    }

    /// Total number of (concept, service) entries across both indexes.
    pub fn entries(&self) -> u64 {
        self.entries
    }

    fn lookup(&self, c: ConceptId, dir: Direction) -> &[ServiceIdx] {
        match dir {
            Direction::In => self.input_relevant(c),
            Direction::Out => self.output_relevant(c),
        }
    }
}

/// Builds the input and output inverted indexes of `registry` from its
/// taxonomy closure, whatever the registry's own mode.
pub fn build_inverted_indexes(registry: &Registry) -> IoIndex {
    IoIndex::build(&registry.taxonomy, &registry.services, registry.config.matching)
}

pub type BackendHook = Box<dyn Fn(u64) + Send + Sync>;

pub struct RegistryBuilder {
    taxonomy: Taxonomy,
    config: DiscoveryConfig,
    services: Vec<Service>,
    ids: BTreeMap<String, ServiceIdx>,
}

impl RegistryBuilder {
    pub fn new(taxonomy: Taxonomy, config: DiscoveryConfig) -> Self {
        RegistryBuilder {
            taxonomy,
            config,
            services: Vec::new(),
            ids: BTreeMap::new(),
        }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn add(&mut self, service: Service) -> Result<ServiceIdx> {
        if check_token(&service.id).is_err() || service.id.starts_with('#') {
            return Err(Error::InvalidServiceId(service.id));
        }
        if self.ids.contains_key(&service.id) {
            return Err(Error::DuplicateService(service.id));
        }
        let n = self.taxonomy.len();
        if let Some(bad) = service.inputs.iter().chain(&service.outputs).find(|c| c.index() >= n) {
            return Err(Error::ServiceConcept {
                service: service.id,
                concept: alloc::format!("#{}", bad.index()),
            });
        }
        let idx = ServiceIdx::from_index(self.services.len());
        self.ids.insert(service.id.clone(), idx);
        self.services.push(service);
        Ok(idx)
    }

    /// Adds a service given by concept tokens.
    pub fn add_named(&mut self, id: &str, inputs: &[&str], outputs: &[&str]) -> Result<ServiceIdx> {
        let resolve = |names: &[&str]| -> Result<Vec<ConceptId>> {
            names
                .iter()
                .map(|n| {
                    self.taxonomy.lookup(n).map_err(|_| Error::ServiceConcept {
                        service: id.to_string(),
                        concept: n.trim().to_string(),
                    })
                })
                .collect()
        };
        let service = Service::new(id.trim(), resolve(inputs)?, resolve(outputs)?);
        self.add(service)
    }

    pub fn build(self) -> Registry {
        let index = self
            .config
            .mode
            .uses_index()
            .then(|| IoIndex::build(&self.taxonomy, &self.services, self.config.matching));
        let sourceless = self
            .services
            .iter()
            .enumerate()
            .filter(|(_, s)| s.inputs.is_empty())
            .map(|(i, _)| ServiceIdx::from_index(i))
            .collect();
        Registry {
            taxonomy: self.taxonomy,
            config: self.config,
            services: self.services,
            ids: self.ids,
            index,
            sourceless,
            stats: QueryStats::default(),
            pair_cache: spin::Mutex::new(BTreeMap::new()),
            backend_hook: None,
        }
    }
}

/// Immutable service set plus its discovery machinery.
///
/// Queries take `&self`; counters are atomic and the pair cache is behind a
/// lock, so one registry can serve concurrent requests.
pub struct Registry {
    taxonomy: Taxonomy,
    config: DiscoveryConfig,
    services: Vec<Service>,
    ids: BTreeMap<String, ServiceIdx>,
    index: Option<IoIndex>,
    sourceless: Vec<ServiceIdx>,
    stats: QueryStats,
    pair_cache: spin::Mutex<BTreeMap<(ConceptId, ConceptId), MatchDegree>>,
    backend_hook: Option<BackendHook>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("services", &self.services.len())
            .field("concepts", &self.taxonomy.len())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Registry {
    pub fn builder(taxonomy: Taxonomy, config: DiscoveryConfig) -> RegistryBuilder {
        RegistryBuilder::new(taxonomy, config)
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn config(&self) -> DiscoveryConfig {
        self.config
    }

    pub fn matching(&self) -> MatchConfig {
        self.config.matching
    }

    pub fn services(&self) -> &[Service] {
        &self.services
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn service(&self, idx: ServiceIdx) -> &Service {
        &self.services[idx.index()]
    }

    pub fn find(&self, id: &str) -> Option<ServiceIdx> {
        self.ids.get(id).copied()
    }

    pub fn by_id(&self, id: &str) -> Option<&Service> {
        self.find(id).map(|i| self.service(i))
    }

    /// Services without inputs; they are invokable with any concept set.
    pub fn sourceless(&self) -> &[ServiceIdx] {
        &self.sourceless
    }

    pub fn index(&self) -> Option<&IoIndex> {
        self.index.as_ref()
    }

    pub fn stats(&self) -> QueryCounts {
        self.stats.snapshot()
    }

    /// Zeroes the counters and drops the concept-pair cache.
    pub fn reset_stats(&self) {
        self.stats.reset();
        self.pair_cache.lock().clear();
    }

    /// Called with the configured latency on every backend call when the
    /// latency is non-zero.
    pub fn set_backend_hook(&mut self, hook: BackendHook) {
        self.backend_hook = Some(hook);
    }

    /// Input-relevant (`c ⊗ In_w ≠ ∅`) or output-relevant (`Out_w ⊗ c ≠ ∅`)
    /// services for `concepts`, sorted by index.
    pub fn relevant_io(&self, concepts: &[ConceptId], dir: Direction) -> Vec<ServiceIdx> {
        self.relevant_io_filtered(concepts, dir, None)
    }

    /// [`Registry::relevant_io`] restricted to services whose `candidates`
    /// flag is set.
    pub fn relevant_io_among(&self, concepts: &[ConceptId], dir: Direction, candidates: &[bool]) -> Vec<ServiceIdx> {
        assert_eq!(candidates.len(), self.services.len(), "candidate mask size");
        self.relevant_io_filtered(concepts, dir, Some(candidates))
    }

    fn relevant_io_filtered(&self, concepts: &[ConceptId], dir: Direction, candidates: Option<&[bool]>) -> Vec<ServiceIdx> {
        self.stats.discovery_calls.fetch_add(1, Ordering::Relaxed);
        let allowed = |i: ServiceIdx| candidates.is_none_or(|mask| mask[i.index()]);
        match &self.index {
            Some(index) if self.config.mode.uses_index() => {
                let mut out: Vec<ServiceIdx> = concepts
                    .iter()
                    .flat_map(|&c| index.lookup(c, dir).iter().copied())
                    .filter(|&i| allowed(i))
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            }
            _ => {
                let walker = Metered::new(self, Route::Walk);
                let cfg = self.config.matching;
                let mut out = Vec::new();
                if concepts.is_empty() {
                    return out;
                }
                for (i, s) in self.services.iter().enumerate() {
                    let idx = ServiceIdx::from_index(i);
                    if !allowed(idx) {
                        continue;
                    }
                    self.backend_call();
                    let hit = match dir {
                        Direction::In => ontology::any_match(&walker, cfg, concepts, &s.inputs),
                        Direction::Out => ontology::any_match(&walker, cfg, &s.outputs, concepts),
                    };
                    if hit {
                        out.push(idx);
                    }
                }
                out
            }
        }
    }

    /// `source ⊗ target` answered through this registry's matchmaking
    /// configuration, with the same accounting as discovery.
    pub fn match_sets(&self, source: &[ConceptId], target: &[ConceptId]) -> Vec<ConceptId> {
        let cfg = self.config.matching;
        match self.config.mode {
            DiscoveryMode::Scan => {
                self.backend_call();
                ontology::match_sets(&Metered::new(self, Route::Walk), cfg, source, target)
            }
            DiscoveryMode::IndexedDiscoveryCachedMatch => {
                ontology::match_sets(&Metered::new(self, Route::Cached), cfg, source, target)
            }
            DiscoveryMode::FullIndexed => {
                ontology::match_sets(&Metered::new(self, Route::Closure), cfg, source, target)
            }
        }
    }

    fn backend_call(&self) {
        self.stats.backend_calls.fetch_add(1, Ordering::Relaxed);
        if self.config.backend_latency_ms > 0 {
            if let Some(hook) = &self.backend_hook {
                hook(self.config.backend_latency_ms);
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Route {
    Walk,
    Cached,
    Closure,
}

/// Counts every degree evaluation and routes it to the configured source.
struct Metered<'r> {
    registry: &'r Registry,
    route: Route,
}

impl<'r> Metered<'r> {
    fn new(registry: &'r Registry, route: Route) -> Self {
        Metered { registry, route }
    }
}

impl Matchmaker for Metered<'_> {
    fn degree(&self, source: ConceptId, target: ConceptId) -> MatchDegree {
        let r = self.registry;
        r.stats.match_calls.fetch_add(1, Ordering::Relaxed);
        match self.route {
            Route::Closure => r.taxonomy.degree(source, target),
            Route::Walk => WalkingMatcher::new(&r.taxonomy).degree(source, target),
            Route::Cached => {
                if let Some(&d) = r.pair_cache.lock().get(&(source, target)) {
                    return d;
                }
                r.backend_call();
                let d = WalkingMatcher::new(&r.taxonomy).degree(source, target);
                r.pair_cache.lock().insert((source, target), d);
                d
            }
        }
    }
}
