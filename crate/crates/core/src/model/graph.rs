use std::collections::HashSet;

use thiserror::Error;

use crate::Scalar;

/// Dense vertex identifier, `0..n`.
pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph must contain at least one vertex")]
    NoVertices,
    #[error("edge ({u}, {v}) references a vertex outside 0..{n}")]
    UnknownVertex { u: VertexId, v: VertexId, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({u}, {v}) has non-positive weight {weight}")]
    NonPositiveWeight { u: VertexId, v: VertexId, weight: f64 },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: VertexId, v: VertexId },
    #[error("graph is disconnected: vertex {unreachable} is unreachable from vertex 0")]
    Disconnected { unreachable: VertexId },
}

/// Undirected edge with a strictly positive cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<S> {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: S,
}

/// Connected, undirected, positively weighted graph.
#[derive(Debug, Clone)]
pub struct Graph<S = f64> {
    edges: Vec<Edge<S>>,
    adjacency: Vec<Vec<(VertexId, S)>>,
}

impl<S: Scalar> Graph<S> {
    /// Validates and builds the graph. Edges are kept in input order, which is
    /// also the order [`Graph::edges`] and the file writer reproduce.
    pub fn new(vertex_count: usize, edges: Vec<Edge<S>>) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::NoVertices);
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u as usize >= vertex_count || e.v as usize >= vertex_count {
                return Err(GraphError::UnknownVertex { u: e.u, v: e.v, n: vertex_count });
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if !(e.weight > S::zero()) || !e.weight.is_finite() {
                return Err(GraphError::NonPositiveWeight { u: e.u, v: e.v, weight: e.weight.to_f64_lossless() });
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(GraphError::DuplicateEdge { u: e.u, v: e.v });
            }
            adjacency[e.u as usize].push((e.v, e.weight));
            adjacency[e.v as usize].push((e.u, e.weight));
        }
        let graph = Graph { edges, adjacency };
        if let Some(unreachable) = graph.first_unreachable() {
            return Err(GraphError::Disconnected { unreachable });
        }
        Ok(graph)
    }

    fn first_unreachable(&self) -> Option<VertexId> {
        let mut seen = vec![false; self.vertex_count()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v as usize);
                }
            }
        }
        seen.iter().position(|s| !s).map(|v| v as VertexId)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, S)] {
        &self.adjacency[v as usize]
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.adjacency.len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.contains(u) && self.neighbors(u).iter().any(|&(w, _)| w == v)
    }

    /// Path graph `0 - 1 - ... - (n-1)` with unit weights.
    pub fn chain(n: usize) -> Self {
        let edges = (1..n).map(|v| Edge { u: (v - 1) as VertexId, v: v as VertexId, weight: S::one() }).collect();
        Self::new(n, edges).expect("chain graph is valid")
    }

    /// `width × height` 4-neighbour grid with unit weights; vertex `(x, y)` is `y * width + x`.
    pub fn grid(width: usize, height: usize) -> Self {
        let id = |x: usize, y: usize| (y * width + x) as VertexId;
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width {
                    edges.push(Edge { u: id(x, y), v: id(x + 1, y), weight: S::one() });
                }
                if y + 1 < height {
                    edges.push(Edge { u: id(x, y), v: id(x, y + 1), weight: S::one() });
                }
            }
        }
        Self::new(width * height, edges).expect("grid graph is valid")
    }
}
