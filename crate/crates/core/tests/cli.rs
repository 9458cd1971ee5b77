mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::temporal_set;
use trajsim::ingest::{load_graph, load_trajectories};

fn trajsim(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajsim"))
        .args(args.split_whitespace())
        .current_dir(dir)
        .env_remove("TRAJSIM_THREADS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &str) -> String {
    let out = trajsim(dir, args);
    assert!(out.status.success(), "{args}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(dir: &Path, file: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(file)).unwrap()).unwrap()
}

/// 1000 walks on a 20x20 grid.
fn dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), "gen --graph grid20x20 --count 1000 --seed 3 --start 0:200 --out t.traj --graph-out g.graph");
    dir
}

#[test]
fn gen_is_deterministic_and_accepts_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, "gen --graph chain100 --count 10 --seed 1 --out a.traj");
    ok(d, "gen --graph chain100 --count 10 --seed 1 --out b.traj");
    assert_eq!(std::fs::read(d.join("a.traj")).unwrap(), std::fs::read(d.join("b.traj")).unwrap());

    ok(d, "gen --graph chain100 --count 0 --seed 1 --out empty.traj --graph-out c.graph");
    let g = load_graph::<f64>(d.join("c.graph")).unwrap();
    assert!(load_trajectories(d.join("empty.traj"), &g).unwrap().is_empty());
}

#[test]
fn usage_errors_exit_2_and_runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(trajsim(d, "gen --graph chain100 --count 10 --out a.traj").status.code(), Some(2));
    assert_eq!(trajsim(d, "frobnicate").status.code(), Some(2));
    let missing = trajsim(d, "stats --graph nothing-here.graph");
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let data = dataset();
    let d = data.path();
    ok(d, "build --graph g.graph --traj t.traj --type pivot --out p.idx");
    let no_radius = trajsim(d, "query --graph g.graph --traj t.traj --id 1 --index pivot --index-file p.idx");
    assert_eq!(no_radius.status.code(), Some(2));
    let unknown = trajsim(d, "query --graph g.graph --traj t.traj --id 123456");
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn build_reports_entry_counts() {
    let data = dataset();
    let d = data.path();
    let pivot = ok(d, "build --graph g.graph --traj t.traj --type pivot --h 8 --out p.idx");
    assert!(pivot.lines().any(|l| l == "entries: 8000"), "{pivot}");
    let tree = ok(d, "build --graph g.graph --traj t.traj --type tree --h 8 --leaf-min 100 --out t.idx");
    let sizes = tree.lines().find_map(|l| l.strip_prefix("roster_sizes: ")).unwrap();
    let total: usize = sizes.split(',').map(|s| s.parse::<usize>().unwrap()).sum();
    assert_eq!(total, 1000);
    let nodes: usize = tree.lines().find_map(|l| l.strip_prefix("nodes: ")).unwrap().parse().unwrap();
    assert_eq!(nodes, sizes.split(',').count());
    assert!(nodes > 1);

    ok(d, "build --graph g.graph --traj t.traj --type tree --h 8 --leaf-min 100 --out t2.idx");
    assert_eq!(std::fs::read(d.join("t.idx")).unwrap(), std::fs::read(d.join("t2.idx")).unwrap());
    let stats = ok(d, "stats --index-file t.idx");
    assert!(stats.contains("index: tree") && stats.contains("entries: 8000"));
}

#[test]
fn queries_self_match_vacuous_filter_and_oracle() {
    let data = dataset();
    let d = data.path();
    ok(d, "query --graph g.graph --traj t.traj --id 42 --k 1 --out self.json");
    let me = json(d, "self.json");
    assert_eq!(me["results"][0]["id"], 42);
    assert_eq!(me["results"][0]["similarity"], 1.0);

    ok(d, "build --graph g.graph --traj t.traj --type pivot --out pivot.idx");
    ok(d, "build --graph g.graph --traj t.traj --type tree --leaf-min 50 --out tree.idx");
    ok(d, "query --graph g.graph --traj t.traj --id 42 --k 16 --out exact.json");
    for kind in ["pivot", "tree"] {
        ok(d, &format!("query --graph g.graph --traj t.traj --id 42 --k 16 --index {kind} --index-file {kind}.idx --r 1 --out {kind}.json"));
        assert_eq!(json(d, &format!("{kind}.json"))["results"], json(d, "exact.json")["results"]);
    }

    ok(d, "query --graph g.graph --traj t.traj --id 42 --k 8 --index pivot --index-file pivot.idx --r 0.05 --oracle --out o.json");
    assert_eq!(json(d, "o.json")["oracle"], "match");

    let ssr = ok(d, "eval-ssr --graph g.graph --traj t.traj --result pivot.json --reference exact.json");
    assert_eq!(serde_json::from_str::<serde_json::Value>(&ssr).unwrap()["ssr"], 1.0);
}

#[test]
fn protocol_reports() {
    let data = dataset();
    let d = data.path();
    ok(d, "protocol --graph g.graph --traj t.traj --queries 15 --k 1,4 --index exact --seed 2 --out-dir exact");
    let summary = std::fs::read_to_string(d.join("exact/summary.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(summary.as_bytes());
    let col = rdr.headers().unwrap().iter().position(|h| h == "mean_ssr").unwrap();
    for rec in rdr.records() {
        assert_eq!(rec.unwrap()[col].parse::<f64>().unwrap(), 1.0);
    }

    let args = "protocol --graph g.graph --traj t.traj --queries 15 --k 1 --index tree --r 1 --leaf-min 50 --seed 2";
    ok(d, &format!("{args} --out-dir a"));
    ok(d, &format!("{args} --out-dir b --threads 3"));
    for f in ["summary.csv", "histogram.csv"] {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }

    let g = load_graph::<f64>(d.join("g.graph")).unwrap();
    let store = load_trajectories(d.join("t.traj"), &g).unwrap();
    let log = std::fs::read_to_string(d.join("a/queries.jsonl")).unwrap();
    let mut temporal = 0.0;
    let mut n = 0.0;
    for line in log.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let q = store.get(rec["query_id"].as_u64().unwrap()).unwrap();
        temporal += temporal_set(&store, q.lifespan()).len() as f64;
        n += 1.0;
    }
    assert_eq!(n, 15.0);
    let summary = std::fs::read_to_string(d.join("a/summary.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(summary.as_bytes());
    let col = rdr.headers().unwrap().iter().position(|h| h == "mean_candidates").unwrap();
    let mean: f64 = rdr.records().next().unwrap().unwrap()[col].parse().unwrap();
    assert!((mean - temporal / n).abs() < 1e-9, "{mean} vs {}", temporal / n);
}

#[test]
fn ingest_gps_writes_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut csv = String::from("trace_id,timestamp,x,y\n");
    for trace in 0..6 {
        for i in 0..8 {
            let (x, y) = if (i + trace) % 2 == 0 { (0.0, 0.0) } else { (40.0, 10.0) };
            csv += &format!("{trace},{},{},{}\n", i * 60 + trace, x + i as f64 * 0.1, y);
        }
    }
    std::fs::write(d.join("gps.csv"), csv).unwrap();
    let report = ok(
        d,
        "ingest-gps --input gps.csv --clusters 2 --time-resolution 30 --seed 1 --graph-out g.graph --traj-out t.traj",
    );
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["vertices"], 2);
    let g = load_graph::<f64>(d.join("g.graph")).unwrap();
    assert_eq!(load_trajectories(d.join("t.traj"), &g).unwrap().len(), 6);
}
