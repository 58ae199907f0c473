//! Semantic input/output service composition.
//!
//! The crate is `no_std` (it only needs `alloc`). The pipeline it implements:
//!
//! 1. [`ontology`]: a concept taxonomy with an eagerly computed subsumption
//!    closure and the `Exact`/`Plugin`/`Subsume`/`Fail` match operators.
//! 2. [`registry`]: a service registry answering fine-grained input/output
//!    relevance queries, either by scanning or through inverted indexes, and
//!    counting the matchmaking work it does.
//! 3. [`graph`]: forward, layer-by-layer construction of the composition graph
//!    for a request.
//! 4. [`optimize`]: backward pruning and interface-dominance reduction.
//! 5. [`search`]: backward A* extraction of the shortest composition with the
//!    fewest services.
//! 6. [`validate`]: an independent checker for compositions.
//!
//! IO, file formats and the command-line front-end live in the `iocompose`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod graph;
pub mod ontology;
pub mod optimize;
pub mod registry;
pub mod search;
pub mod validate;

pub use error::{Error, Result};
pub use graph::{fwd_graph, CompositionGraph, GraphOutcome, NodeId, Request};
pub use ontology::{ConceptId, MatchConfig, MatchDegree, Taxonomy, TaxonomyBuilder};
pub use registry::{DiscoveryConfig, DiscoveryMode, Registry, RegistryBuilder, Service, ServiceIdx};
pub use search::{astar, Composition, Cost, Heuristic, SearchOptions};
pub use validate::{is_valid, ValidationReport};
