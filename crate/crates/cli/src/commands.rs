use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tokvec::corpus::{load_corpus, save_corpus, Corpus, CorpusFormat};
use tokvec::encoder::{load_codebook, save_codebook, train_codebook, Encoder, KMeansParams, TrainingOptions};
use tokvec::evaluate::{
    emit_report, generate, pareto_frontier, run_grid, sample_queries, EvalOptions, GeneratorConfig, Grid,
    LatencyStat,
};
use tokvec::index::{Filter, Index};

use crate::server::{self, AppState, MountConfig};
use crate::wire::{parse_strict, SearchRequest, SearchResponse, DEFAULT_SIZE};

#[derive(Debug, Parser)]
#[command(name = "tokvec", version, about = "Token-based vector search over an inverted index")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded Gaussian-mixture corpus.
    GenData(GenData),
    /// Train a subvector codebook.
    TrainCodebook(TrainCodebook),
    /// Build an index and write its snapshot directory.
    BuildIndex(BuildIndex),
    /// Search a snapshot and print hits as JSON.
    Search(SearchArgs),
    /// Run an encoder × window grid and write CSV reports.
    Evaluate(Evaluate),
    /// Serve snapshots over HTTP.
    Serve(Serve),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Packed,
}

#[derive(Debug, Args)]
pub struct CorpusInput {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to `packed` for `.tvec` files and `jsonl` otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

fn corpus_format(path: &Path, format: Option<FormatArg>) -> CorpusFormat {
    match format {
        Some(FormatArg::Jsonl) => CorpusFormat::Jsonl,
        Some(FormatArg::Packed) => CorpusFormat::PackedBinary,
        None if path.extension().is_some_and(|e| e == "tvec") => CorpusFormat::PackedBinary,
        None => CorpusFormat::Jsonl,
    }
}

impl CorpusInput {
    fn load(&self) -> tokvec::Result<Corpus> {
        load_corpus(&self.input, corpus_format(&self.input, self.format))
    }
}

#[derive(Debug, Args)]
pub struct GenData {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 10)]
    pub components: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct KMeansArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Train on at most this many sampled vectors.
    #[arg(long, default_value_t = TrainingOptions::default().sample_cap)]
    pub sample_cap: usize,
}

impl KMeansArgs {
    fn params(&self, k: usize) -> KMeansParams {
        KMeansParams {
            k,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed: self.seed,
            restarts: self.restarts,
        }
    }

    fn training(&self) -> TrainingOptions {
        TrainingOptions {
            sample_cap: self.sample_cap,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainCodebook {
    #[command(flatten)]
    pub corpus: CorpusInput,
    /// Number of subvector positions.
    #[arg(long)]
    pub m: usize,
    /// Clusters per position.
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildIndex {
    #[command(flatten)]
    pub corpus: CorpusInput,
    /// Use the subvector encoder with this codebook.
    #[arg(long, conflicts_with_all = ["rounding_p", "rounding_m"], required_unless_present = "rounding_m")]
    pub codebook: Option<PathBuf>,
    /// Decimal places for the rounding encoder.
    #[arg(long, requires = "rounding_m")]
    pub rounding_p: Option<u32>,
    /// Entries kept by the rounding encoder.
    #[arg(long)]
    pub rounding_m: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// JSON array of numbers, or a full search request object.
    #[arg(long)]
    pub vector_file: PathBuf,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    /// JSON list of filters, e.g. '[{"type":"term","field":"color","value":"red"}]'.
    #[arg(long)]
    pub filters: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatArg {
    Mean,
    P50,
    P95,
}

#[derive(Debug, Args)]
pub struct Evaluate {
    #[command(flatten)]
    pub corpus: CorpusInput,
    /// JSON grid: {"encoders":[{"scheme":"subvector","k":64,"m":16},...],"windows":[24,48]}.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    #[arg(long, default_value_t = 0)]
    pub query_seed: u64,
    #[arg(long, default_value_t = 24)]
    pub k_eval: usize,
    /// Keep a corpus-member query in its own gold standard and results.
    #[arg(long)]
    pub include_self: bool,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[arg(long, value_enum, default_value_t = StatArg::Mean)]
    pub latency_stat: StatArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Serve {
    /// Snapshot directory to mount.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub index: Option<PathBuf>,
    /// Name under which `--index` is mounted.
    #[arg(long, default_value = "default")]
    pub name: String,
    /// JSON file: {"indexes": {"name": "snapshot/dir", ...}}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:9200")]
    pub bind: SocketAddr,
}

fn print_json(value: &impl Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_strict(&bytes).map_err(|e| {
        let at = e.path.map(|p| format!(" at {p}")).unwrap_or_default();
        anyhow::anyhow!("{}{at}: {}", path.display(), e.message)
    })
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData(args) => {
            let config = GeneratorConfig {
                n: args.n,
                d: args.d,
                components: args.components,
                sigma: args.sigma,
                seed: args.seed,
            };
            let corpus = generate(&config)?;
            save_corpus(&corpus, &args.out, corpus_format(&args.out, args.format))?;
            print_json(&serde_json::json!({ "out": args.out, "n": corpus.len(), "d": corpus.dimension() }))
        }
        Command::TrainCodebook(args) => {
            let corpus = args.corpus.load()?;
            let codebook = train_codebook(&corpus, args.m, &args.kmeans.params(args.k), &args.kmeans.training())?;
            save_codebook(&codebook, &args.out)?;
            print_json(&serde_json::json!({ "out": args.out, "d": codebook.dimension(), "m": args.m, "k": args.k }))
        }
        Command::BuildIndex(args) => {
            let corpus = args.corpus.load()?;
            let encoder = match (&args.codebook, args.rounding_m) {
                (Some(path), _) => Encoder::subvector(load_codebook(path)?),
                (None, Some(m)) => Encoder::rounding(args.rounding_p.unwrap_or(0), m),
                (None, None) => anyhow::bail!("either --codebook or --rounding-m is required"),
            };
            let index = Index::build(&corpus, encoder)?;
            index.snapshot(&args.out)?;
            print_json(&index.stats())
        }
        Command::Search(args) => {
            let bytes = std::fs::read(&args.vector_file).with_context(|| format!("reading {}", args.vector_file.display()))?;
            let mut request = match parse_strict::<Vec<f64>>(&bytes) {
                Ok(vector) => SearchRequest {
                    vector,
                    size: DEFAULT_SIZE,
                    window: None,
                    filters: Vec::new(),
                },
                Err(_) => read_json::<SearchRequest>(&args.vector_file)?,
            };
            if let Some(size) = args.size {
                request.size = size;
            }
            if args.window.is_some() {
                request.window = args.window;
            }
            if let Some(filters) = &args.filters {
                request.filters = parse_strict::<Vec<Filter>>(filters.as_bytes()).map_err(|e| {
                    let at = e.path.map(|p| format!(" at {p}")).unwrap_or_default();
                    anyhow::anyhow!("--filters{at}: {}", e.message)
                })?;
            }
            let index = Index::open_snapshot(&args.index)?;
            let start = Instant::now();
            let result = tokvec::search::search(&index, &request.to_query())?;
            let took_ms = start.elapsed().as_secs_f64() * 1e3;
            print_json(&SearchResponse::from_result(result, took_ms))
        }
        Command::Evaluate(args) => {
            let corpus = args.corpus.load()?;
            let grid: Grid = read_json(&args.grid)?;
            let queries = sample_queries(&corpus, args.queries, args.query_seed)?;
            let options = EvalOptions {
                k_eval: args.k_eval,
                exclude_self: !args.include_self,
                seed: args.kmeans.seed,
                max_iterations: args.kmeans.max_iterations,
                tolerance: args.kmeans.tolerance,
                restarts: args.kmeans.restarts,
                training: args.kmeans.training(),
            };
            let records = run_grid(&corpus, &queries, &grid, &options)?;
            let stat = match args.latency_stat {
                StatArg::Mean => LatencyStat::Mean,
                StatArg::P50 => LatencyStat::P50,
                StatArg::P95 => LatencyStat::P95,
            };
            let frontier = pareto_frontier(&records, stat);
            let [records_path, frontier_path] = emit_report(&records, &frontier, &args.out)?;
            print_json(&serde_json::json!({
                "records": records_path,
                "frontier": frontier_path,
                "cells": records.len(),
                "skipped": records.iter().filter(|r| r.mean_precision().is_none()).count(),
            }))
        }
        Command::Serve(args) => {
            let config = match (&args.config, &args.index) {
                (Some(path), _) => MountConfig::load(path)?,
                (None, Some(dir)) => MountConfig::single(&args.name, dir),
                (None, None) => anyhow::bail!("either --index or --config is required"),
            };
            let state = AppState::open(&config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(args.bind)
                    .await
                    .with_context(|| format!("binding {}", args.bind))?;
                let addr = listener.local_addr()?;
                print_json(&serde_json::json!({ "listening": addr.to_string(), "indexes": config.indexes.keys().collect::<Vec<_>>() }))?;
                server::serve(listener, state).await?;
                Ok(())
            })
        }
    }
}
