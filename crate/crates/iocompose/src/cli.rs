//! Command-line front-end.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use iocompose_core::search::Composition;
use iocompose_core::{DiscoveryMode, Heuristic};

use crate::bench::{bench, check_consistency};
use crate::config::{self, FileConfig};
use crate::error::{Error, Result, EXIT_INVALID_INPUT, EXIT_OK, EXIT_UNSOLVABLE};
use crate::formats::{self, Dataset};
use crate::generate::{generate_to, GeneratorParams};
use crate::pipeline::{csv_table, run, RunOptions, RunOutcome};
use crate::wsc;

#[derive(Debug, Parser)]
#[command(name = "iocompose", version, about = "Semantic input/output service composition")]
pub struct Cli {
    /// Defaults file with `key = value` lines (mode, allow_subsume, heuristic, latency_ms).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a dataset into the canonical text format.
    Import {
        /// Dataset directory.
        src: PathBuf,
        /// Read WSC'08 XML (taxonomy.xml, services.xml, problem.xml).
        #[arg(long)]
        wsc: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build, reduce and search the composition graph of one dataset.
    Compose {
        dataset: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Write report, composition and graph dump files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run datasets under several discovery modes and tabulate the results.
    Bench {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Modes to compare; all three by default.
        #[arg(long = "mode", value_parser = parse_mode)]
        modes: Vec<DiscoveryMode>,
        #[arg(long)]
        allow_subsume: bool,
        #[arg(long, value_parser = parse_heuristic)]
        heuristic: Option<Heuristic>,
        #[arg(long)]
        latency_ms: Option<u64>,
        #[arg(long)]
        no_timing: bool,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Write the table to `<out>/bench.<format>` instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic layered dataset with a planted solution.
    Generate {
        #[arg(long, default_value_t = 1000)]
        w: usize,
        #[arg(long, default_value_t = 500)]
        concepts: usize,
        #[arg(long, default_value_t = 10)]
        l: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 100.0)]
        k: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a composition (JSON) against a dataset.
    Validate {
        dataset: PathBuf,
        composition: PathBuf,
        #[arg(long)]
        allow_subsume: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<DiscoveryMode>,
    #[arg(long)]
    pub allow_subsume: bool,
    #[arg(long, value_parser = parse_heuristic)]
    pub heuristic: Option<Heuristic>,
    /// Keep at most this many successors per search expansion (inexact).
    #[arg(long)]
    pub beam: Option<usize>,
    /// Simulated latency per backend call.
    #[arg(long)]
    pub latency_ms: Option<u64>,
    /// Leave timings out so reports are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

fn parse_mode(s: &str) -> std::result::Result<DiscoveryMode, String> {
    s.parse()
}

fn parse_heuristic(s: &str) -> std::result::Result<Heuristic, String> {
    config::parse_heuristic(s).ok_or_else(|| format!("unknown heuristic `{s}` (expected zero or depth)"))
}

fn options(file: &FileConfig, mode: Option<DiscoveryMode>, subsume: bool, heuristic: Option<Heuristic>, latency: Option<u64>) -> RunOptions {
    let d = RunOptions::default();
    RunOptions {
        mode: mode.or(file.mode).unwrap_or(d.mode),
        allow_subsume: subsume || file.allow_subsume.unwrap_or(d.allow_subsume),
        heuristic: heuristic.or(file.heuristic).unwrap_or(d.heuristic),
        latency_ms: latency.or(file.latency_ms).unwrap_or(d.latency_ms),
        ..d
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Runs the parsed command, writing normal output to `stdout`. Returns the
/// process exit code.
pub fn execute(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    let mut emit = |s: &str| stdout.write_all(s.as_bytes()).map_err(|e| Error::io("<stdout>", e));
    match cli.command {
        Command::Import { src, wsc: is_wsc, out } => {
            let dataset = if is_wsc { wsc::import(&src)? } else { Dataset::load(&src)? };
            dataset.save(&out)?;
            emit(&format!(
                "imported `{}`: {} concepts, {} services\n",
                dataset.name,
                dataset.taxonomy.len(),
                dataset.services.len()
            ))?;
            Ok(EXIT_OK)
        }
        Command::Compose { dataset, run: args, format, out } => {
            let ds = Dataset::load(&dataset)?;
            let mut opts = options(&file, args.mode, args.allow_subsume, args.heuristic, args.latency_ms);
            opts.beam = args.beam;
            opts.timing = !args.no_timing;
            let outcome = run(&ds, &opts)?;
            if let Some(dir) = &out {
                write_compose_files(dir, &ds, &outcome)?;
            }
            emit(&match format {
                OutputFormat::Json => json(&outcome),
                OutputFormat::Csv => csv_table(std::slice::from_ref(&outcome.report)),
                OutputFormat::Text => match &outcome.composition {
                    Some(c) => formats::composition_text(c),
                    None => "unsolvable\n".to_string(),
                },
            })?;
            Ok(if outcome.composition.is_some() { EXIT_OK } else { EXIT_UNSOLVABLE })
        }
        Command::Bench { datasets, modes, allow_subsume, heuristic, latency_ms, no_timing, parallel, format, out } => {
            let modes = if modes.is_empty() { DiscoveryMode::ALL.to_vec() } else { modes };
            let mut opts = options(&file, None, allow_subsume, heuristic, latency_ms);
            opts.timing = !no_timing;
            let mut loaded = Vec::new();
            let mut failed = false;
            for dir in &datasets {
                match Dataset::load(dir) {
                    Ok(d) => loaded.push(d),
                    Err(e) => {
                        eprintln!("skipping {}: {e}", dir.display());
                        failed = true;
                    }
                }
            }
            let mut rows: Vec<RunOutcome> = Vec::new();
            for result in bench(&loaded, &modes, &opts, parallel) {
                match result {
                    Ok(r) => rows.push(r),
                    Err(e @ Error::Invariant(_)) => return Err(e),
                    Err(e) => {
                        eprintln!("run failed: {e}");
                        failed = true;
                    }
                }
            }
            check_consistency(&rows)?;
            let (text, ext) = match format {
                OutputFormat::Json => (json(&rows), "json"),
                OutputFormat::Csv | OutputFormat::Text => {
                    let reports: Vec<_> = rows.iter().map(|r| r.report.clone()).collect();
                    (csv_table(&reports), "csv")
                }
            };
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                    formats::write(&dir.join(format!("bench.{ext}")), &text)?;
                }
                None => emit(&text)?,
            }
            Ok(if failed { EXIT_INVALID_INPUT } else { EXIT_OK })
        }
        Command::Generate { w, concepts, l, m, n, k, seed, out } => {
            let params = GeneratorParams { w, concepts, l, m, n, k, seed };
            let planted = generate_to(&params, &out)?;
            emit(&format!(
                "generated {} services, planted cost ({}, {}), realized k {:.1}\n",
                w, planted.length, planted.services, planted.realized_k
            ))?;
            Ok(EXIT_OK)
        }
        Command::Validate { dataset, composition, allow_subsume } => {
            let ds = Dataset::load(&dataset)?;
            let opts = options(&file, None, allow_subsume, None, None);
            let registry = ds.registry(opts.discovery())?;
            let comp = read_composition(&composition)?;
            let report = iocompose_core::is_valid(&comp, &ds.request, &registry)?;
            emit(&json(&report))?;
            Ok(if report.valid { EXIT_OK } else { EXIT_INVALID_INPUT })
        }
    }
}

fn read_composition(path: &Path) -> Result<Composition> {
    let text = formats::read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn write_compose_files(dir: &Path, ds: &Dataset, outcome: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    formats::write(&dir.join("report.json"), &json(outcome))?;
    formats::write(&dir.join("report.csv"), &csv_table(std::slice::from_ref(&outcome.report)))?;
    formats::write(&dir.join("reduction.json"), &json(&outcome.reduction))?;
    formats::write(&dir.join("graph.txt"), &formats::dump_graph(&outcome.graph, &ds.taxonomy))?;
    if let Some(c) = &outcome.composition {
        formats::write(&dir.join("composition.txt"), &formats::composition_text(c))?;
        formats::write(&dir.join("composition.json"), &json(c))?;
    }
    Ok(())
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let code = match execute(cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = stdout.flush();
    code
}
