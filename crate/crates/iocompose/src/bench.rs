//! One run per (dataset, mode), optionally spread over worker threads.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use iocompose_core::DiscoveryMode;

use crate::error::{Error, Result};
use crate::formats::Dataset;
use crate::pipeline::{run, RunOptions, RunOutcome};

/// Runs every dataset under every mode. Results come back in dataset-major,
/// then mode order, whatever `parallel` is.
pub fn bench(datasets: &[Dataset], modes: &[DiscoveryMode], base: &RunOptions, parallel: usize) -> Vec<Result<RunOutcome>> {
    let jobs: Vec<(&Dataset, DiscoveryMode)> =
        datasets.iter().flat_map(|d| modes.iter().map(move |&m| (d, m))).collect();
    let slots: Vec<Mutex<Option<Result<RunOutcome>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(dataset, mode)) = jobs.get(i) else { break };
        let options = RunOptions { mode, ..*base };
        *slots[i].lock().expect("no panics while holding the slot") = Some(run(dataset, &options));
    };
    let workers = parallel.clamp(1, jobs.len().max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("worker finished").expect("every job ran"))
        .collect()
}

/// Modes must agree on everything but counters and timings, and the fully
/// indexed mode must never reach the backend.
pub fn check_consistency(rows: &[RunOutcome]) -> Result<()> {
    let mut by_dataset: BTreeMap<&str, Vec<&RunOutcome>> = BTreeMap::new();
    for r in rows {
        if r.report.mode == DiscoveryMode::FullIndexed && r.report.backend_calls != 0 {
            return Err(Error::Invariant(format!(
                "`{}`: full indexing made {} backend calls",
                r.report.dataset, r.report.backend_calls
            )));
        }
        by_dataset.entry(&r.report.dataset).or_default().push(r);
    }
    for (name, runs) in by_dataset {
        let key = |r: &RunOutcome| (r.report.graph_size, r.report.opt_size, r.report.sol_services, r.report.sol_length);
        let first = key(runs[0]);
        if let Some(other) = runs.iter().find(|r| key(r) != first) {
            return Err(Error::Invariant(format!(
                "`{name}`: mode {} disagrees with mode {}",
                other.report.mode, runs[0].report.mode
            )));
        }
    }
    Ok(())
}
