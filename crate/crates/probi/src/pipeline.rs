//! Stream → coreset → solve → evaluate, shared by the CLI and the tests.

use std::time::Instant;

use probi_core::coreset::CoresetConfig;
use probi_core::eval::{aggregate, evaluate, EvalReport, RunStatistics};
use probi_core::rng::derive_seed;
use probi_core::solver::{solve, Solution, SolverConfig};
use probi_core::stream::{StreamConfig, StreamState, Summary};
use probi_core::CoresetNode;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct StreamOutcome {
    pub summary: Summary,
    pub nodes_read: u64,
    pub reductions: u64,
    /// Most nodes held by the cascade at any one time.
    pub peak_live_nodes: usize,
    /// Largest `N + Σ occupied level sizes` seen after any push.
    pub peak_occupancy: usize,
}

/// Runs a node stream through Merge & Reduce in a single pass.
pub fn stream_coreset<I>(nodes: I, cfg: StreamConfig) -> Result<StreamOutcome>
where
    I: IntoIterator<Item = Result<CoresetNode>>,
{
    let mut state = StreamState::new(cfg)?;
    let mut peak_occupancy = 0;
    for node in nodes {
        state.push(node?);
        let occupied: usize = state
            .occupied_levels()
            .into_iter()
            .filter_map(|l| state.level(l))
            .map(|s| s.nodes.len())
            .sum();
        peak_occupancy = peak_occupancy.max(cfg.bucket_capacity + occupied);
    }
    Ok(StreamOutcome {
        summary: state.finalize()?,
        nodes_read: state.count(),
        reductions: state.reductions(),
        peak_live_nodes: state.peak_live_nodes(),
        peak_occupancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub stream: StreamConfig,
    pub solver: SolverConfig,
}

impl PipelineConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        PipelineConfig {
            stream: StreamConfig::new(CoresetConfig::new(k, seed)),
            solver: SolverConfig::new(k, seed),
        }
    }

    /// Same settings, both random streams reseeded.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.stream.coreset.rng_seed = seed;
        self.solver.rng_seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub summary: Summary,
    pub solution: Solution,
    pub report: EvalReport,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Summarises `full` in stream order, solves on the summary and evaluates the
/// solution on both.
pub fn run_pipeline(full: &[CoresetNode], cfg: &PipelineConfig) -> Result<PipelineRun> {
    let t = Instant::now();
    let outcome = stream_coreset(full.iter().cloned().map(Ok), cfg.stream)?;
    let coreset_ms = millis(t);
    let t = Instant::now();
    let solution = solve(&outcome.summary.nodes, &cfg.solver)?;
    let solve_ms = millis(t);
    let mut report = evaluate(&outcome.summary.nodes, full, &solution.centers);
    report.runtime_coreset_ms = coreset_ms;
    report.runtime_solve_ms = solve_ms;
    report.seed = cfg.stream.coreset.rng_seed;
    Ok(PipelineRun {
        summary: outcome.summary,
        solution,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub k: usize,
    pub seed: u64,
    pub node_count: usize,
    pub statistics: RunStatistics,
    pub reports: Vec<EvalReport>,
}

/// Seed of repetition `rep` in a benchmark seeded with `seed`.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    derive_seed(seed, rep as u64)
}

/// Repeats the pipeline `reps` times. Without `timing` the runtime fields are
/// zeroed so the result depends on the seed alone.
pub fn bench(
    full: &[CoresetNode],
    cfg: &PipelineConfig,
    reps: usize,
    timing: bool,
) -> Result<BenchResult> {
    let seed = cfg.stream.coreset.rng_seed;
    let mut reports = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut report = run_pipeline(full, &cfg.with_seed(rep_seed(seed, rep)))?.report;
        if !timing {
            report.runtime_coreset_ms = 0.0;
            report.runtime_solve_ms = 0.0;
        }
        reports.push(report);
    }
    Ok(BenchResult {
        k: cfg.solver.k,
        seed,
        node_count: full.len(),
        statistics: aggregate(&reports)?,
        reports,
    })
}
