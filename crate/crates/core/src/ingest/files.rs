//! Plain-text graph and trajectory files.
//!
//! Graph: a header line `n m`, then `m` lines `u v w` with 0-based vertex ids.
//! Trajectories: one per line, `id len v1 a1 b1 ... vlen alen blen`.
//! Blank lines are ignored in both.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::IngestError;
use crate::model::{validate, Edge, Graph, Step, Trajectory, TrajectoryStore, VertexId};
use crate::Scalar;

fn parse<T: FromStr>(token: &str, line: usize, what: &str) -> Result<T, IngestError> {
    token.parse().map_err(|_| IngestError::Parse { line, message: format!("invalid {what} `{token}`") })
}

fn content_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String), IngestError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(IngestError::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

pub fn read_graph<S: Scalar>(reader: impl BufRead) -> Result<Graph<S>, IngestError> {
    let mut lines = content_lines(reader);
    let (line, header) =
        lines.next().transpose()?.ok_or(IngestError::Parse { line: 1, message: "missing header".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = fields[..] else {
        return Err(IngestError::Parse { line, message: "header must be `n m`".into() });
    };
    let n: usize = parse(n, line, "vertex count")?;
    let m: usize = parse(m, line, "edge count")?;
    let mut edges = Vec::with_capacity(m.min(1 << 20));
    let mut seen = HashSet::new();
    for entry in lines {
        let (line, text) = entry?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        let [u, v, w] = fields[..] else {
            return Err(IngestError::Parse { line, message: "edge line must be `u v w`".into() });
        };
        let u: VertexId = parse(u, line, "vertex")?;
        let v: VertexId = parse(v, line, "vertex")?;
        let weight: S = parse(w, line, "weight")?;
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(IngestError::Parse { line, message: format!("duplicate edge ({u}, {v})") });
        }
        edges.push(Edge { u, v, weight });
    }
    if edges.len() != m {
        return Err(IngestError::Parse { line, message: format!("header promises {m} edges, found {}", edges.len()) });
    }
    Ok(Graph::new(n, edges)?)
}

pub fn write_graph<S: Scalar>(graph: &Graph<S>, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", graph.vertex_count(), graph.edge_count())?;
    for e in graph.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, e.weight)?;
    }
    Ok(())
}

pub fn load_graph<S: Scalar>(path: impl AsRef<Path>) -> Result<Graph<S>, IngestError> {
    read_graph(BufReader::new(File::open(path)?))
}

pub fn save_graph<S: Scalar>(graph: &Graph<S>, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_graph(graph, &mut out)?;
    Ok(out.flush()?)
}

fn parse_trajectory(line: usize, text: &str) -> Result<Trajectory, IngestError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(IngestError::Parse { line, message: "expected `id len` followed by steps".into() });
    }
    let id = parse(fields[0], line, "trajectory id")?;
    let len: usize = parse(fields[1], line, "step count")?;
    let rest = &fields[2..];
    if rest.len() != len.saturating_mul(3) {
        return Err(IngestError::Parse {
            line,
            message: format!("trajectory {id} declares {len} steps but has {} fields", rest.len()),
        });
    }
    let steps = rest
        .chunks_exact(3)
        .map(|c| Ok(Step::new(parse(c[0], line, "vertex")?, parse(c[1], line, "time")?, parse(c[2], line, "time")?)))
        .collect::<Result<Vec<_>, IngestError>>()?;
    Ok(Trajectory::new(id, steps))
}

/// Reads and validates every trajectory against `graph`.
pub fn read_trajectories<S: Scalar>(reader: impl BufRead, graph: &Graph<S>) -> Result<TrajectoryStore, IngestError> {
    let mut store = TrajectoryStore::new();
    for entry in content_lines(reader) {
        let (line, text) = entry?;
        let t = parse_trajectory(line, &text)?;
        let violations = validate(&t, graph);
        if !violations.is_empty() {
            return Err(IngestError::Validation { id: t.id, violations });
        }
        store.push(t).map_err(|id| IngestError::Parse { line, message: format!("duplicate trajectory id {id}") })?;
    }
    Ok(store)
}

pub fn write_trajectories<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    mut out: impl Write,
) -> std::io::Result<()> {
    for t in trajectories {
        write!(out, "{} {}", t.id, t.len())?;
        for s in &t.steps {
            write!(out, " {} {} {}", s.vertex, s.interval.start(), s.interval.end())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn load_trajectories<S: Scalar>(path: impl AsRef<Path>, graph: &Graph<S>) -> Result<TrajectoryStore, IngestError> {
    read_trajectories(BufReader::new(File::open(path)?), graph)
}

pub fn save_trajectories(store: &TrajectoryStore, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trajectories(store, &mut out)?;
    Ok(out.flush()?)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::model::{GraphError, Violation};

    fn graph(text: &str) -> Result<Graph<f64>, IngestError> {
        read_graph(text.as_bytes())
    }

    #[test]
    fn chain_graph_file() {
        let g = graph("3 2\n0 1 1.0\n1 2 1.0\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && !g.has_edge(0, 2));
    }

    #[test]
    fn graph_file_errors() {
        assert!(matches!(graph("2 1\n0 1 0.0\n"), Err(IngestError::Graph(GraphError::NonPositiveWeight { .. }))));
        assert!(matches!(graph("3 3\n0 1 1\n1 2 1\n2 1 4\n"), Err(IngestError::Parse { line: 4, .. })));
        assert!(matches!(graph("3 1\n0 1 1\n"), Err(IngestError::Graph(GraphError::Disconnected { .. }))));
        assert!(matches!(graph("2 1\n0 1 x\n"), Err(IngestError::Parse { line: 2, .. })));
        assert!(matches!(graph("2 2\n0 1 1\n"), Err(IngestError::Parse { .. })));
        assert!(matches!(graph(""), Err(IngestError::Parse { line: 1, .. })));
    }

    #[test]
    fn trajectory_line() {
        let g = Graph::<f64>::chain(3);
        let store = read_trajectories("7 2 0 0 3 1 3 5\n".as_bytes(), &g).unwrap();
        let t = store.get(7).unwrap();
        assert_eq!(t.steps, vec![Step::new(0, 0, 3), Step::new(1, 3, 5)]);
    }

    #[test]
    fn trajectory_errors() {
        let g = Graph::<f64>::chain(3);
        let err = read_trajectories("7 2 0 0 3 1 4 5\n".as_bytes(), &g).unwrap_err();
        match &err {
            IngestError::Validation { id: 7, violations } => {
                assert!(matches!(violations[0], Violation::Gap { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("gap"));
        assert!(matches!(read_trajectories("7 2 0 0 3\n".as_bytes(), &g), Err(IngestError::Parse { line: 1, .. })));
        assert!(matches!(
            read_trajectories("1 1 0 0 3\n1 1 1 0 3\n".as_bytes(), &g),
            Err(IngestError::Parse { line: 2, .. })
        ));
        assert!(read_trajectories("".as_bytes(), &g).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn graph_round_trip(n in 2usize..30, extra in 0usize..40, seed in any::<u64>()) {
            let g: Graph<f64> = super::super::random_connected_graph(n, extra, (0.001, 1e6), seed).unwrap();
            let mut buf = Vec::new();
            write_graph(&g, &mut buf).unwrap();
            let back: Graph<f64> = read_graph(&buf[..]).unwrap();
            prop_assert_eq!(back.edges(), g.edges());
            let mut again = Vec::new();
            write_graph(&back, &mut again).unwrap();
            prop_assert_eq!(again, buf);
        }

        #[test]
        fn trajectory_round_trip(count in 0usize..30, seed in any::<u64>()) {
            let g = Graph::<f64>::grid(4, 4);
            let cfg = super::super::WorkloadConfig { count, walk_len: 1..=6, dwell: 1..=5, start: -10..=10, seed };
            let store = super::super::generate_synthetic(&g, &cfg).unwrap();
            let mut buf = Vec::new();
            write_trajectories(&store, &mut buf).unwrap();
            let back = read_trajectories(&buf[..], &g).unwrap();
            prop_assert_eq!(back, store);
        }
    }
}
