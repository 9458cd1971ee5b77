use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "trajsim", version, about = "Top-k similarity search for trajectories on weighted graphs")]
struct Cli {
    /// Worker threads for index construction and candidate evaluation.
    #[arg(long, global = true, env = "TRAJSIM_THREADS")]
    threads: Option<usize>,

    /// Print progress details to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate random-walk trajectories.
    Gen(GenArgs),
    /// Build a graph and trajectories from GPS traces.
    IngestGps(IngestGpsArgs),
    /// Build and save a pivot or tree index.
    Build(BuildArgs),
    /// Answer one top-k query.
    Query(QueryArgs),
    /// Run the sampled query benchmark and write reports.
    Protocol(ProtocolArgs),
    /// Similarity score ratio between two query results.
    EvalSsr(EvalSsrArgs),
    /// Describe a graph, trajectory file or index file.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Graph file, or a built-in graph: chain<N>, grid<W>x<H>, random<N>.
    #[arg(long)]
    graph: String,
    /// Trajectory file.
    #[arg(long)]
    traj: PathBuf,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Graph file, or a built-in graph: chain<N>, grid<W>x<H>, random<N>.
    #[arg(long)]
    graph: String,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// Steps per walk, inclusive range `A:B`.
    #[arg(long, default_value = "5:20")]
    walk_len: String,
    /// Time units per step, inclusive range `A:B`.
    #[arg(long, default_value = "1:10")]
    dwell: String,
    /// Start times, inclusive range `A:B`.
    #[arg(long, default_value = "0:1000")]
    start: String,
    /// Output trajectory file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the graph (useful for built-in graphs).
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IngestGpsArgs {
    /// CSV with header `trace_id,timestamp,x,y`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    clusters: usize,
    /// Seconds per time unit.
    #[arg(long)]
    time_resolution: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    graph_out: PathBuf,
    #[arg(long)]
    traj_out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum IndexType {
    Pivot,
    Tree,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PathType {
    Exact,
    Pivot,
    Tree,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KernelType {
    Merge,
    Naive,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long = "type", value_enum)]
    kind: IndexType,
    /// Number of pivots.
    #[arg(long, default_value_t = 8)]
    h: usize,
    /// Largest set the tree keeps in a single leaf.
    #[arg(long, default_value_t = 100)]
    leaf_min: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "exact")]
    index: PathType,
    /// Index file built over the same trajectories (pivot and tree paths).
    #[arg(long)]
    index_file: Option<PathBuf>,
    /// Id of a stored trajectory to use as the query.
    #[arg(long, conflicts_with = "query_file", required_unless_present = "query_file")]
    id: Option<u64>,
    /// Trajectory file whose first trajectory is the query.
    #[arg(long)]
    query_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Filter radius (pivot and tree paths).
    #[arg(long)]
    r: Option<f64>,
    /// Query interval `A:B` (half-open); defaults to the query's lifespan.
    #[arg(long)]
    window: Option<String>,
    /// Also run the double-loop evaluator and report whether it agrees.
    #[arg(long)]
    oracle: bool,
    /// Evaluate every candidate in full.
    #[arg(long)]
    no_bounding: bool,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
    k: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact")]
    index: Vec<PathType>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = 8)]
    h: usize,
    #[arg(long, default_value_t = 100)]
    leaf_min: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "merge")]
    kernel: KernelType,
    #[arg(long)]
    no_bounding: bool,
    /// Skip the all-pairs similarity histogram.
    #[arg(long)]
    no_histogram: bool,
    /// Directory for queries.jsonl, summary.csv, timing.csv, build.csv and histogram.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct EvalSsrArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Query result JSON to score.
    #[arg(long)]
    result: PathBuf,
    /// Query result JSON used as reference, usually the exact answer.
    #[arg(long)]
    reference: PathBuf,
    /// Trajectory file holding the query, when it is not in the store.
    #[arg(long)]
    query_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long, requires = "graph")]
    traj: Option<PathBuf>,
    #[arg(long)]
    index_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match commands::run(cli.command, cli.verbose) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
