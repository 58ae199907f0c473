//! The full composition run: graph, reduction, search, expansion, check.

use std::time::{Duration, Instant};

use iocompose_core::graph::{fwd_graph, CompositionGraph};
use iocompose_core::optimize::{backward_prune, dominance_reduce, expand_composition, AbstractInterface};
use iocompose_core::registry::QueryCounts;
use iocompose_core::search::{astar, Composition, Heuristic, SearchOptions};
use iocompose_core::validate::{is_valid, ValidationReport};
use iocompose_core::{DiscoveryConfig, DiscoveryMode, MatchConfig, Registry};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: DiscoveryMode,
    pub allow_subsume: bool,
    pub heuristic: Heuristic,
    pub beam: Option<usize>,
    /// Simulated latency per backend call, in milliseconds.
    pub latency_ms: u64,
    /// Record wall-clock timings. Off gives byte-identical reports.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: DiscoveryMode::FullIndexed,
            allow_subsume: false,
            heuristic: Heuristic::Depth,
            beam: None,
            latency_ms: 0,
            timing: true,
        }
    }
}

impl RunOptions {
    pub fn discovery(&self) -> DiscoveryConfig {
        DiscoveryConfig {
            mode: self.mode,
            backend_latency_ms: self.latency_ms,
            matching: MatchConfig { allow_subsume: self.allow_subsume },
        }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub dataset: String,
    pub mode: DiscoveryMode,
    /// Services in the composition graph, dummies excluded.
    pub graph_size: usize,
    pub graph_ms: Option<f64>,
    pub backend_calls: u64,
    /// Services left after pruning and dominance reduction.
    pub opt_size: usize,
    pub reduction_pct: f64,
    pub search_ms: Option<f64>,
    pub sol_services: Option<usize>,
    pub sol_length: Option<usize>,
}

pub const CSV_HEADER: &str =
    "dataset,mode,graph_size,graph_ms,backend_calls,opt_size,reduction_pct,search_ms,sol_services,sol_length";

impl RunReport {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            csv_field(&self.dataset),
            self.mode.to_string(),
            self.graph_size.to_string(),
            opt(self.graph_ms.map(|v| v.to_string())),
            self.backend_calls.to_string(),
            self.opt_size.to_string(),
            format!("{:.1}", self.reduction_pct),
            opt(self.search_ms.map(|v| v.to_string())),
            opt(self.sol_services.map(|v| v.to_string())),
            opt(self.sol_length.map(|v| v.to_string())),
        ]
        .join(",")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_table(reports: &[RunReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Milliseconds rounded to three significant digits.
pub fn millis_3sig(d: Duration) -> f64 {
    let ms = d.as_secs_f64() * 1e3;
    if ms == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(2 - ms.log10().floor() as i32);
    (ms * scale).round() / scale
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub pruned: Vec<String>,
    pub dominated: Vec<String>,
    pub interfaces: Vec<AbstractInterface>,
    pub diagnostics: Vec<String>,
}

/// Everything a run produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub report: RunReport,
    pub counts: QueryCounts,
    pub relevant_per_layer: Vec<usize>,
    pub reduction: ReductionReport,
    pub expanded_nodes: usize,
    pub composition: Option<Composition>,
    pub validation: Option<ValidationReport>,
    #[serde(skip)]
    pub graph: CompositionGraph,
}

fn timed<T>(on: bool, f: impl FnOnce() -> T) -> (T, Option<Duration>) {
    let start = Instant::now();
    let out = f();
    (out, on.then(|| start.elapsed()))
}

/// Runs the whole pipeline on `dataset`. An unsolvable request still yields
/// an outcome (without composition); a composition that fails validation is
/// an invariant error and is never returned.
pub fn run(dataset: &Dataset, options: &RunOptions) -> Result<RunOutcome> {
    let mut registry = dataset.registry(options.discovery())?;
    if options.latency_ms > 0 {
        registry.set_backend_hook(Box::new(|ms| std::thread::sleep(Duration::from_millis(ms))));
    }
    run_on(&dataset.name, &registry, dataset, options)
}

pub fn run_on(name: &str, registry: &Registry, dataset: &Dataset, options: &RunOptions) -> Result<RunOutcome> {
    registry.reset_stats();
    let (build, graph_time) = timed(options.timing, || fwd_graph(&dataset.request, registry));
    let build = build?;
    let solved = build.outcome.is_solved();
    let graph = build.outcome.into_graph();
    let graph_size = graph.regular_count();

    let pruned = backward_prune(&graph)?;
    let reduced = dominance_reduce(&pruned.graph);
    let opt_size = reduced.graph.regular_count();
    let reduction_pct = if graph_size == 0 { 0.0 } else { 100.0 * (graph_size - opt_size) as f64 / graph_size as f64 };

    let search_options = SearchOptions { heuristic: options.heuristic, beam: options.beam };
    let (search, search_time) = timed(options.timing, || {
        if solved {
            astar(&reduced.graph, search_options).map(Some)
        } else {
            Ok(None)
        }
    });
    let search = search?;
    let expanded_nodes = search.as_ref().map_or(0, |s| s.expanded);
    let found = search.and_then(|s| s.composition);

    let (composition, validation) = match found {
        Some(c) => {
            let c = expand_composition(&c, &reduced.interfaces)?;
            let report = is_valid(&c, &dataset.request, registry)?;
            if !report.valid {
                return Err(Error::Invariant(format!(
                    "composition for `{name}` failed validation: {:?}",
                    report.violated_at
                )));
            }
            (Some(c), Some(report))
        }
        None if solved && options.beam.is_none() => {
            return Err(Error::Invariant(format!("graph for `{name}` is solvable but search found nothing")));
        }
        None => (None, None),
    };

    let report = RunReport {
        dataset: name.to_string(),
        mode: options.mode,
        graph_size,
        graph_ms: graph_time.map(millis_3sig),
        backend_calls: build.counts.backend_calls,
        opt_size,
        reduction_pct,
        search_ms: search_time.map(millis_3sig),
        sol_services: composition.as_ref().map(|c| c.cost.services),
        sol_length: composition.as_ref().map(|c| c.cost.length),
    };
    Ok(RunOutcome {
        report,
        counts: build.counts,
        relevant_per_layer: build.relevant_per_layer,
        reduction: ReductionReport {
            pruned: pruned.removed,
            dominated: reduced.dominated,
            interfaces: reduced.interfaces,
            diagnostics: reduced.diagnostics,
        },
        expanded_nodes,
        composition,
        validation,
        graph,
    })
}
