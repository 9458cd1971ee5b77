use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::error::ErrorKind;
use clap::CommandFactory;
use serde::{Deserialize, Serialize};
use trajsim::index::{IndexError, PivotIndex, TreeIndex};
use trajsim::ingest::{self, GpsConfig, WorkloadConfig};
use trajsim::query::{self, Hit, IndexKind, Indexes, Kernel, ProtocolConfig, QueryError, QueryOptions, QuerySpec};
use trajsim::{DistanceOracle, Graph, Interval, Trajectory, TrajectoryId, TrajectoryStore};

use crate::{
    BuildArgs, Cli, Command, DataArgs, EvalSsrArgs, GenArgs, IndexType, IngestGpsArgs, KernelType, PathType,
    ProtocolArgs, QueryArgs, StatsArgs,
};

/// Fixed seed for the `random<N>` built-in graph so every command sees the same graph.
const BUILTIN_GRAPH_SEED: u64 = 0;

pub fn run(command: Command, verbose: bool) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a, verbose),
        Command::IngestGps(a) => ingest_gps(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query_cmd(a, verbose),
        Command::Protocol(a) => protocol(a, verbose),
        Command::EvalSsr(a) => eval_ssr(a),
        Command::Stats(a) => stats(a),
    }
}

fn usage_error(kind: ErrorKind, message: &str) -> ! {
    Cli::command().error(kind, message).exit()
}

fn parse_range<T: std::str::FromStr>(text: &str, what: &str) -> Result<std::ops::RangeInclusive<T>> {
    let (a, b) = text.split_once(':').ok_or_else(|| anyhow!("{what} must look like A:B, got `{text}`"))?;
    let parse = |s: &str| s.trim().parse::<T>().map_err(|_| anyhow!("invalid number `{s}` in {what}"));
    Ok(parse(a)?..=parse(b)?)
}

fn parse_window(text: &str) -> Result<Interval> {
    let r = parse_range::<i64>(text, "--window")?;
    Interval::new(*r.start(), *r.end()).ok_or_else(|| anyhow!("--window {text} is empty"))
}

fn builtin_graph(spec: &str) -> Result<Option<Graph<f64>>> {
    let number = |s: &str| s.parse::<usize>().ok().filter(|&n| n > 0);
    if let Some(n) = spec.strip_prefix("chain").and_then(number) {
        return Ok(Some(Graph::chain(n)));
    }
    if let Some((w, h)) = spec.strip_prefix("grid").and_then(|s| s.split_once('x')) {
        if let (Some(w), Some(h)) = (number(w), number(h)) {
            return Ok(Some(Graph::grid(w, h)));
        }
    }
    if let Some(n) = spec.strip_prefix("random").and_then(number) {
        return Ok(Some(ingest::random_connected_graph(n, n, (1.0, 10.0), BUILTIN_GRAPH_SEED)?));
    }
    Ok(None)
}

fn load_graph(spec: &str) -> Result<Graph<f64>> {
    if !Path::new(spec).exists() {
        if let Some(g) = builtin_graph(spec)? {
            return Ok(g);
        }
    }
    ingest::load_graph(spec).with_context(|| format!("reading graph {spec}"))
}

fn load_data(data: &DataArgs) -> Result<(Arc<Graph<f64>>, TrajectoryStore)> {
    let graph = load_graph(&data.graph)?;
    let store = ingest::load_trajectories(&data.traj, &graph)
        .with_context(|| format!("reading trajectories {}", data.traj.display()))?;
    Ok((Arc::new(graph), store))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn gen(a: GenArgs, verbose: bool) -> Result<()> {
    let config = WorkloadConfig {
        count: a.count,
        walk_len: parse_range(&a.walk_len, "--walk-len")?,
        dwell: parse_range(&a.dwell, "--dwell")?,
        start: parse_range(&a.start, "--start")?,
        seed: a.seed,
    };
    let graph = load_graph(&a.graph)?;
    let store = ingest::generate_synthetic(&graph, &config)?;
    ingest::save_trajectories(&store, &a.out)?;
    if let Some(path) = &a.graph_out {
        ingest::save_graph(&graph, path)?;
    }
    if verbose {
        eprintln!("generated {} trajectories on {} vertices", store.len(), graph.vertex_count());
    }
    println!("wrote {} trajectories to {}", store.len(), a.out.display());
    Ok(())
}

fn ingest_gps(a: IngestGpsArgs) -> Result<()> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let points = ingest::read_gps_csv(std::io::BufReader::new(file))?;
    let (graph, store, report) =
        ingest::gps_to_graph::<f64>(&points, &GpsConfig::new(a.clusters, a.time_resolution, a.seed))?;
    ingest::save_graph(&graph, &a.graph_out)?;
    ingest::save_trajectories(&store, &a.traj_out)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let (graph, store) = load_data(&a.data)?;
    let oracle = DistanceOracle::new(graph);
    let start = Instant::now();
    let mut out = String::new();
    match a.kind {
        IndexType::Pivot => {
            let index = PivotIndex::build(&store, &oracle, a.h)?;
            let elapsed = start.elapsed();
            index.save(&a.out)?;
            out += &format!("type: pivot\ntrajectories: {}\n", index.roster().len());
            out += &format!("pivots: {}\nentries: {}\n", index.pivots().len(), index.entry_count());
            out += &format!("build_ms: {:.3}\n", elapsed.as_secs_f64() * 1e3);
        }
        IndexType::Tree => {
            let index = TreeIndex::build(&store, &oracle, a.h, a.leaf_min)?;
            let elapsed = start.elapsed();
            index.save(&a.out)?;
            let stats = index.stats();
            let sizes: Vec<String> = stats.roster_sizes.iter().map(ToString::to_string).collect();
            out += &format!("type: tree\ntrajectories: {}\n", index.len());
            out += &format!("pivots: {}\nentries: {}\n", index.pivots().len(), index.entry_count());
            out += &format!("nodes: {}\ndepth: {}\nroster_sizes: {}\n", stats.node_count, stats.depth, sizes.join(","));
            out += &format!("build_ms: {:.3}\n", elapsed.as_secs_f64() * 1e3);
        }
    }
    print!("{out}");
    Ok(())
}

fn index_kind(p: PathType) -> IndexKind {
    match p {
        PathType::Exact => IndexKind::Exact,
        PathType::Pivot => IndexKind::Pivot,
        PathType::Tree => IndexKind::Tree,
    }
}

#[derive(Serialize, Deserialize)]
struct QueryOutput {
    query_id: TrajectoryId,
    window: [i64; 2],
    k: usize,
    index: IndexKind,
    r: Option<f64>,
    candidate_count: usize,
    fell_back: bool,
    filter_ms: f64,
    eval_ms: f64,
    results: Vec<Hit<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    oracle: Option<String>,
}

fn read_query_file(path: &Path, graph: &Graph<f64>) -> Result<Trajectory> {
    let store = ingest::load_trajectories(path, graph).with_context(|| format!("reading query {}", path.display()))?;
    store.into_vec().into_iter().next().ok_or_else(|| anyhow!("{} holds no trajectory", path.display()))
}

fn query_cmd(a: QueryArgs, verbose: bool) -> Result<()> {
    let kind = index_kind(a.index);
    if kind != IndexKind::Exact {
        if a.r.is_none() {
            usage_error(ErrorKind::MissingRequiredArgument, "--r is required with --index pivot or tree");
        }
        if a.index_file.is_none() {
            usage_error(ErrorKind::MissingRequiredArgument, "--index-file is required with --index pivot or tree");
        }
    }
    let window = a.window.as_deref().map(parse_window).transpose()?;
    let (graph, store) = load_data(&a.data)?;
    let q = match (a.id, &a.query_file) {
        (Some(id), _) => store.get(id).cloned().ok_or_else(|| anyhow!("no trajectory with id {id}"))?,
        (None, Some(path)) => read_query_file(path, &graph)?,
        (None, None) => unreachable!("enforced by clap"),
    };
    let oracle = DistanceOracle::new(graph);
    let (mut pivot, mut tree) = (None, None);
    match (kind, &a.index_file) {
        (IndexKind::Pivot, Some(path)) => {
            pivot = Some(PivotIndex::<f64>::load(path).with_context(|| format!("reading index {}", path.display()))?)
        }
        (IndexKind::Tree, Some(path)) => {
            tree = Some(TreeIndex::<f64>::load(path).with_context(|| format!("reading index {}", path.display()))?)
        }
        _ => {}
    }
    let indexes = Indexes { pivot: pivot.as_ref(), tree: tree.as_ref() };
    let mut spec = QuerySpec::new(q, a.k).via(kind, a.r);
    if let Some(w) = window {
        spec = spec.window(w);
    }
    let options = QueryOptions { bounding: !a.no_bounding, ..QueryOptions::default() };
    let result = query::topk(&spec, &store, indexes, &oracle, options)?;
    if result.fell_back {
        eprintln!("warning: window {} is outside the index interval; scanned every trajectory", spec.window);
    }
    if verbose {
        eprintln!("{} candidates, {} merge steps", result.candidate_count, result.merge_steps);
    }
    let verdict = if a.oracle {
        let naive = QueryOptions { bounding: false, parallel: true, kernel: Kernel::Naive };
        let check = query::topk(&spec, &store, indexes, &oracle, naive)?;
        let agree = check.hits.len() == result.hits.len()
            && check
                .hits
                .iter()
                .zip(&result.hits)
                .all(|(x, y)| x.id == y.id && (x.similarity - y.similarity).abs() <= 1e-12);
        let verdict = if agree { "match" } else { "mismatch" };
        eprintln!("oracle: {verdict}");
        Some(verdict.to_string())
    } else {
        None
    };
    let output = QueryOutput {
        query_id: spec.query.id,
        window: [spec.window.start(), spec.window.end()],
        k: spec.k,
        index: kind,
        r: spec.radius,
        candidate_count: result.candidate_count,
        fell_back: result.fell_back,
        filter_ms: result.filter_time.as_secs_f64() * 1e3,
        eval_ms: result.eval_time.as_secs_f64() * 1e3,
        results: result.hits,
        oracle: verdict,
    };
    let json = serde_json::to_string_pretty(&output)?;
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{json}")?;
            w.flush()?;
        }
        None => println!("{json}"),
    }
    if output.oracle.as_deref() == Some("mismatch") {
        bail!("oracle disagrees with the query result");
    }
    Ok(())
}

fn protocol(a: ProtocolArgs, verbose: bool) -> Result<()> {
    let kinds: Vec<IndexKind> = a.index.iter().copied().map(index_kind).collect();
    if a.r.is_none() && kinds.iter().any(|&k| k != IndexKind::Exact) {
        usage_error(ErrorKind::MissingRequiredArgument, "--r is required when --index includes pivot or tree");
    }
    let (graph, store) = load_data(&a.data)?;
    let oracle = DistanceOracle::new(graph);
    let config = ProtocolConfig {
        query_count: a.queries,
        ks: a.k.clone(),
        indexes: kinds,
        radius: a.r,
        h: a.h,
        leaf_min: a.leaf_min,
        seed: a.seed,
        kernel: match a.kernel {
            KernelType::Merge => Kernel::Merge,
            KernelType::Naive => Kernel::Naive,
        },
        bounding: !a.no_bounding,
        parallel: true,
        histogram: !a.no_histogram,
    };
    let report = query::run_protocol(&store, &oracle, &config)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let file = |name: &str| create(&a.out_dir.join(name));
    let mut w = file("queries.jsonl")?;
    report.write_jsonl(&mut w)?;
    w.flush()?;
    report.write_summary_csv(file("summary.csv")?)?;
    report.write_timing_csv(file("timing.csv")?)?;
    report.write_build_csv(file("build.csv")?)?;
    if report.histogram.is_some() {
        report.write_histogram_csv(file("histogram.csv")?)?;
    }
    if verbose {
        eprintln!("{} queries, {} records", report.queries.len(), report.records.len());
    }
    println!("{:<6} {:>4} {:>8} {:>14} {:>10} {:>10}", "index", "k", "queries", "candidates", "mean_ssr", "mean_ms");
    for (s, t) in report.summary.iter().zip(&report.timing) {
        let ssr = s.mean_ssr.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<6} {:>4} {:>8} {:>14.1} {:>10} {:>10.3}",
            s.index, s.k, s.queries, s.mean_candidates, ssr, t.mean_ms
        );
    }
    for b in &report.builds {
        println!("build {}: {:.3} ms, {} entries", b.index, b.build_ms, b.entries);
    }
    Ok(())
}

fn eval_ssr(a: EvalSsrArgs) -> Result<()> {
    let read = |path: &Path| -> Result<QueryOutput> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    };
    let (result, reference) = (read(&a.result)?, read(&a.reference)?);
    ensure!(
        result.query_id == reference.query_id && result.window == reference.window,
        "result and reference answer different queries"
    );
    let (graph, store) = load_data(&a.data)?;
    let q = match &a.query_file {
        Some(path) => read_query_file(path, &graph)?,
        None => store
            .get(result.query_id)
            .cloned()
            .ok_or_else(|| anyhow!("query {} is not in the store; pass --query-file", result.query_id))?,
    };
    let window = Interval::new(result.window[0], result.window[1]).ok_or_else(|| anyhow!("empty window in result"))?;
    let oracle = DistanceOracle::new(graph);
    let ids = |o: &QueryOutput| o.results.iter().map(|h| h.id).collect::<Vec<_>>();
    match query::ssr(&ids(&result), &ids(&reference), &q, window, &store, &oracle) {
        Ok(v) => println!("{}", serde_json::json!({ "ssr": v })),
        Err(QueryError::ZeroReference) => {
            println!("{}", serde_json::json!({ "ssr": null, "reason": "reference similarity sum is zero" }))
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    ensure!(a.graph.is_some() || a.index_file.is_some(), "nothing to describe: pass --graph and/or --index-file");
    if let Some(spec) = &a.graph {
        let graph = load_graph(spec)?;
        println!("vertices: {}\nedges: {}", graph.vertex_count(), graph.edge_count());
        if let Some(path) = &a.traj {
            let store = ingest::load_trajectories(path, &graph)
                .with_context(|| format!("reading trajectories {}", path.display()))?;
            let steps: usize = store.iter().map(Trajectory::len).sum();
            println!("trajectories: {}\nsteps: {steps}", store.len());
            if !store.is_empty() {
                println!("mean_steps: {:.3}\ntime_span: {}", steps as f64 / store.len() as f64, store.time_span());
            }
        }
    }
    if let Some(path) = &a.index_file {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        match PivotIndex::<f64>::from_bytes(&bytes) {
            Ok(index) => {
                println!("index: pivot\ninterval: {}\npivots: {:?}", index.interval(), index.pivots());
                println!("trajectories: {}\nentries: {}", index.roster().len(), index.entry_count());
            }
            Err(IndexError::Format(_)) => {
                let index = TreeIndex::<f64>::from_bytes(&bytes).context("not a pivot or tree index file")?;
                let s = index.stats();
                println!("index: tree\ninterval: {}\npivots: {:?}", index.interval(), index.pivots());
                println!("trajectories: {}\nentries: {}", index.len(), index.entry_count());
                println!("nodes: {}\ndepth: {}\nleaf_min: {}", s.node_count, s.depth, index.leaf_min());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
