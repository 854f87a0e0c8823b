use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use probi_core::coreset::CoresetConfig;
use probi_core::coreset::SamplingScheme;
use probi_core::eval::evaluate;
use probi_core::solver::{solve, SolverConfig};
use probi_core::stream::StreamConfig;
use probi_core::CenterSet;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::formats::{self, CoresetFileMeta, NodeReader, PointReader};
use crate::pipeline::{self, PipelineConfig};
use crate::synth::synth_nodes;
use crate::synthetic::BlobSpec;

/// Streaming coresets and clustering for probabilistic k-median.
#[derive(Debug, Parser)]
#[command(name = "probi", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group a point file into uniform nodes of `chunk` realizations.
    Synth {
        #[arg(long, env = "PROBI_POINTS")]
        points: PathBuf,
        #[arg(long, env = "PROBI_OUT")]
        out: PathBuf,
        #[arg(long, env = "PROBI_CHUNK", default_value_t = 10)]
        chunk: usize,
    },
    /// Summarise a node file into a coreset file in one pass.
    Coreset {
        #[arg(long, env = "PROBI_NODES")]
        nodes: PathBuf,
        #[arg(long, env = "PROBI_OUT")]
        out: PathBuf,
        #[command(flatten)]
        summary: SummaryArgs,
        #[arg(long, env = "PROBI_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Cluster a node or coreset file and write the centers.
    Solve {
        #[arg(long, env = "PROBI_INPUT")]
        input: PathBuf,
        #[arg(long, env = "PROBI_OUT")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, env = "PROBI_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Cost of a center set on the full data and on a summary.
    Eval {
        #[arg(long, env = "PROBI_NODES")]
        nodes: PathBuf,
        /// Defaults to the full data.
        #[arg(long, env = "PROBI_SUMMARY")]
        summary: Option<PathBuf>,
        #[arg(long, env = "PROBI_CENTERS")]
        centers: PathBuf,
        #[arg(long, env = "PROBI_OUT")]
        out: PathBuf,
    },
    /// Repeat coreset + solve + eval and report statistics.
    Bench {
        #[arg(long, env = "PROBI_NODES")]
        nodes: PathBuf,
        #[arg(long, env = "PROBI_OUT")]
        out: PathBuf,
        #[command(flatten)]
        summary: SummaryArgs,
        #[arg(long, env = "PROBI_RESTARTS", default_value_t = 1)]
        restarts: usize,
        #[arg(long, env = "PROBI_MAX_ITERS", default_value_t = 10)]
        max_iters: usize,
        #[arg(long, env = "PROBI_REPS", default_value_t = 100)]
        reps: usize,
        #[arg(long, env = "PROBI_SEED", default_value_t = 0)]
        seed: u64,
        /// Write zero runtimes so the output depends on the seed alone.
        #[arg(long, env = "PROBI_NO_TIMING")]
        no_timing: bool,
    },
    /// Write a synthetic point file of Gaussian blobs.
    Generate {
        #[arg(long, env = "PROBI_OUT")]
        out: PathBuf,
        #[arg(long, value_enum, env = "PROBI_PRESET", default_value_t = Preset::Census)]
        preset: Preset,
        /// Number of nodes; each contributes `chunk` consecutive points.
        #[arg(long, env = "PROBI_COUNT", default_value_t = 1000)]
        count: usize,
        #[arg(long, env = "PROBI_CHUNK", default_value_t = 10)]
        chunk: usize,
        #[arg(long, env = "PROBI_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Well separated blobs.
    Census,
    /// Overlapping blobs with background noise.
    Covertype,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampling {
    Weighted,
    Uniform,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[arg(long, env = "PROBI_K")]
    pub k: usize,
    /// Capacity of the first stream bucket; defaults to 200·k.
    #[arg(long, env = "PROBI_BUCKET_CAPACITY")]
    pub bucket_capacity: Option<usize>,
    #[arg(long, env = "PROBI_SAMPLE_CONSTANT", default_value_t = 200.0)]
    pub sample_constant: f64,
    #[arg(long, env = "PROBI_EPSILON", default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, value_enum, env = "PROBI_SAMPLING", default_value_t = Sampling::Weighted)]
    pub sampling: Sampling,
}

impl SummaryArgs {
    fn stream_config(&self, seed: u64) -> Result<StreamConfig> {
        check_k(self.k)?;
        let mut coreset = CoresetConfig::new(self.k, seed);
        coreset.sample_constant = self.sample_constant;
        coreset.epsilon = self.epsilon;
        coreset.sampling = match self.sampling {
            Sampling::Weighted => SamplingScheme::WeightProportional,
            Sampling::Uniform => SamplingScheme::Uniform,
        };
        let mut cfg = StreamConfig::new(coreset);
        if let Some(n) = self.bucket_capacity {
            cfg.bucket_capacity = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, env = "PROBI_K")]
    pub k: usize,
    #[arg(long, env = "PROBI_RESTARTS", default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, env = "PROBI_MAX_ITERS", default_value_t = 10)]
    pub max_iters: usize,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(HarnessError::InvalidArgument("k must be at least 1".into()));
    }
    Ok(())
}

fn solver_config(k: usize, restarts: usize, max_iters: usize, seed: u64) -> Result<SolverConfig> {
    check_k(k)?;
    let cfg = SolverConfig {
        restarts,
        max_iterations: max_iters,
        ..SolverConfig::new(k, seed)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn finish<W: Write>(
    path: &Path,
    write: impl FnOnce(&mut W) -> std::io::Result<()>,
    mut out: W,
) -> Result<()> {
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let out = formats::create(path)?;
    finish(
        path,
        |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        },
        out,
    )
}

fn dims_agree(path: &Path, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(HarnessError::Dimension {
            path: path.into(),
            line: 0,
            expected,
            found,
        });
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { points, out, chunk } => {
            let mut chunker = synth_nodes(PointReader::open(&points)?, chunk)?;
            let mut w = formats::create(&out)?;
            let mut written = 0usize;
            for node in chunker.by_ref() {
                formats::write_node(&mut w, &node?, None).map_err(|e| HarnessError::io(&out, e))?;
                written += 1;
            }
            if written == 0 && chunker.dropped() == 0 {
                return Err(HarnessError::Parse {
                    path: points,
                    line: 0,
                    message: "no data lines".into(),
                });
            }
            finish(&out, |_| Ok(()), w)
        }
        Command::Coreset {
            nodes,
            out,
            summary,
            seed,
        } => {
            let cfg = summary.stream_config(seed)?;
            let result = pipeline::stream_coreset(NodeReader::open(&nodes)?, cfg)?;
            let s = result.summary;
            let meta = CoresetFileMeta {
                k: cfg.coreset.k,
                seed,
                epsilon: cfg.coreset.epsilon,
                sample_constant: cfg.coreset.sample_constant,
                bucket_capacity: cfg.bucket_capacity,
                total_weight: s.total_weight(),
                coreset_size: s.nodes.len(),
                source_nodes: s.represented,
            };
            let w = formats::create(&out)?;
            finish(&out, |w| formats::write_coreset(w, &meta, &s.nodes), w)
        }
        Command::Solve {
            input,
            out,
            solver,
            seed,
        } => {
            let cfg = solver_config(solver.k, solver.restarts, solver.max_iters, seed)?;
            let set = formats::read_nodes(&input)?;
            let sol = solve(&set.nodes, &cfg)?;
            let header = format!(
                "k={} k_used={} seed={} cost={:?}",
                cfg.k, sol.k_used, seed, sol.cost
            );
            let w = formats::create(&out)?;
            finish(
                &out,
                |w| formats::write_points(w, Some(&header), sol.centers.points()),
                w,
            )
        }
        Command::Eval {
            nodes,
            summary,
            centers,
            out,
        } => {
            let full = formats::read_nodes(&nodes)?;
            let centers_path = centers;
            let centers = CenterSet::new(formats::read_points(&centers_path)?)?;
            dims_agree(&centers_path, full.nodes[0].node().dim(), centers.dim())?;
            let report = match summary {
                Some(path) => {
                    let s = formats::read_nodes(&path)?;
                    dims_agree(&path, centers.dim(), s.nodes[0].node().dim())?;
                    evaluate(&s.nodes, &full.nodes, &centers)
                }
                None => evaluate(&full.nodes, &full.nodes, &centers),
            };
            write_json(&out, &report)
        }
        Command::Bench {
            nodes,
            out,
            summary,
            restarts,
            max_iters,
            reps,
            seed,
            no_timing,
        } => {
            if reps == 0 {
                return Err(HarnessError::InvalidArgument(
                    "reps must be at least 1".into(),
                ));
            }
            let cfg = PipelineConfig {
                stream: summary.stream_config(seed)?,
                solver: solver_config(summary.k, restarts, max_iters, seed)?,
            };
            let full = formats::read_nodes(&nodes)?;
            let result = pipeline::bench(&full.nodes, &cfg, reps, !no_timing)?;
            write_json(&out, &result)
        }
        Command::Generate {
            out,
            preset,
            count,
            chunk,
            seed,
        } => {
            if chunk == 0 {
                return Err(HarnessError::InvalidArgument(
                    "chunk must be at least 1".into(),
                ));
            }
            let spec = match preset {
                Preset::Census => BlobSpec::census_like(count, seed),
                Preset::Covertype => BlobSpec::covertype_like(count, seed),
            };
            let spec = BlobSpec {
                realizations: chunk,
                ..spec
            };
            let header = format!("{preset:?} blobs, {count} nodes of {chunk} points, seed {seed}")
                .to_lowercase();
            let w = formats::create(&out)?;
            finish(
                &out,
                |w| {
                    formats::write_points(w, Some(&header), &[])?;
                    for node in spec.stream() {
                        let pts: Vec<_> = node
                            .realizations()
                            .iter()
                            .map(|r| r.point().clone())
                            .collect();
                        formats::write_points(w, None, &pts)?;
                    }
                    Ok(())
                },
                w,
            )
        }
    }
}
