use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub pos: Vec<f64>,
}

/// An undirected edge. `u -> v` is the reference orientation used by signed flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

impl Edge {
    /// The endpoint opposite to `w`, or `None` if `w` is not an endpoint.
    pub fn other(&self, w: usize) -> Option<usize> {
        if w == self.u {
            Some(self.v)
        } else if w == self.v {
            Some(self.u)
        } else {
            None
        }
    }

    /// +1 when traversing from `from` follows the reference orientation, -1 otherwise.
    pub fn direction_from(&self, from: usize) -> f64 {
        if from == self.u {
            1.0
        } else {
            -1.0
        }
    }
}

/// Finite embedded graph standing in for the ambient domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    dimension: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
}

impl GeometricGraph {
    /// Builds a graph from positions and `(u, v, length)` triples. A `None` length
    /// is replaced by the Euclidean distance of the endpoints.
    pub fn new(
        dimension: usize,
        positions: Vec<Vec<f64>>,
        edges: Vec<(usize, usize, Option<f64>)>,
    ) -> Result<Self, ModelError> {
        if dimension == 0 {
            return Err(ModelError::schema("dimension", "must be positive"));
        }
        let vertices: Vec<Vertex> = positions
            .into_iter()
            .enumerate()
            .map(|(id, pos)| Vertex { id, pos })
            .collect();
        for v in &vertices {
            if v.pos.len() != dimension {
                return Err(ModelError::shape(
                    format!("vertices[{}].pos", v.id),
                    dimension,
                    v.pos.len(),
                ));
            }
            if v.pos.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::schema(
                    format!("vertices[{}].pos", v.id),
                    "coordinates must be finite",
                ));
            }
        }
        let n = vertices.len();
        let mut out = Vec::with_capacity(edges.len());
        for (id, (u, v, length)) in edges.into_iter().enumerate() {
            for w in [u, v] {
                if w >= n {
                    return Err(ModelError::DanglingId {
                        field: format!("edges[{id}]"),
                        id: w,
                    });
                }
            }
            if u == v {
                return Err(ModelError::schema(
                    format!("edges[{id}]"),
                    "self-loops are not allowed",
                ));
            }
            let length = length.unwrap_or_else(|| euclid(&vertices[u].pos, &vertices[v].pos));
            if !(length > 0.0) || !length.is_finite() {
                return Err(ModelError::NonPositiveLength { edge: id, length });
            }
            out.push(Edge { id, u, v, length });
        }
        let mut incident = vec![Vec::new(); n];
        for e in &out {
            incident[e.u].push(e.id);
            incident[e.v].push(e.id);
        }
        Ok(Self {
            dimension,
            vertices,
            edges: out,
            incident,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn position(&self, v: usize) -> &[f64] {
        &self.vertices[v].pos
    }

    /// Edge ids incident to `v`, in increasing order.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        euclid(&self.vertices[a].pos, &self.vertices[b].pos)
    }

    /// Smallest-id edge joining `a` and `b`.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.incident[a]
            .iter()
            .copied()
            .find(|&e| self.edges[e].other(a) == Some(b))
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A walk in the graph. Vertices and edges are both stored so that parallel
/// edges stay distinguishable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    #[serde(rename = "path")]
    vertices: Vec<usize>,
    edges: Vec<usize>,
}

impl Path {
    pub fn new(
        graph: &GeometricGraph,
        vertices: Vec<usize>,
        edges: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let p = Path { vertices, edges };
        p.check(graph)?;
        Ok(p)
    }

    /// Resolves each consecutive vertex pair to the smallest-id edge joining them.
    pub fn from_vertices(graph: &GeometricGraph, vertices: Vec<usize>) -> Result<Self, ModelError> {
        if vertices.len() < 2 {
            return Err(ModelError::InvalidPath(
                "needs at least two vertices".into(),
            ));
        }
        let mut edges = Vec::with_capacity(vertices.len() - 1);
        for w in vertices.windows(2) {
            if w[0] >= graph.num_vertices() || w[1] >= graph.num_vertices() {
                return Err(ModelError::InvalidPath(format!(
                    "unknown vertex in {:?}",
                    w
                )));
            }
            let e = graph.edge_between(w[0], w[1]).ok_or_else(|| {
                ModelError::InvalidPath(format!("vertices {} and {} are not adjacent", w[0], w[1]))
            })?;
            edges.push(e);
        }
        Ok(Path { vertices, edges })
    }

    /// Walks the given edges starting from `start`.
    pub fn from_edges(
        graph: &GeometricGraph,
        start: usize,
        edges: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let mut vertices = vec![start];
        let mut at = start;
        for &e in &edges {
            if e >= graph.num_edges() {
                return Err(ModelError::UnknownEdge(e));
            }
            at = graph.edge(e).other(at).ok_or_else(|| {
                ModelError::InvalidPath(format!("edge {e} does not touch vertex {at}"))
            })?;
            vertices.push(at);
        }
        Path::new(graph, vertices, edges)
    }

    pub fn check(&self, graph: &GeometricGraph) -> Result<(), ModelError> {
        if self.vertices.len() < 2 {
            return Err(ModelError::InvalidPath(
                "needs at least two vertices".into(),
            ));
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return Err(ModelError::InvalidPath(
                "edge count must be vertex count minus one".into(),
            ));
        }
        for (k, &e) in self.edges.iter().enumerate() {
            if e >= graph.num_edges() {
                return Err(ModelError::UnknownEdge(e));
            }
            let (a, b) = (self.vertices[k], self.vertices[k + 1]);
            if graph.edge(e).other(a) != Some(b) {
                return Err(ModelError::InvalidPath(format!(
                    "edge {e} does not join {a} and {b}"
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("paths are nonempty")
    }

    pub fn length(&self, graph: &GeometricGraph) -> f64 {
        self.edges.iter().map(|&e| graph.edge(e).length).sum()
    }

    /// No vertex repeats.
    pub fn is_simple(&self) -> bool {
        let mut seen = self.vertices.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Signed traversals `(edge, +1/-1)` relative to each edge's reference orientation.
    pub fn signed_edges<'a>(
        &'a self,
        graph: &'a GeometricGraph,
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.edges
            .iter()
            .enumerate()
            .map(move |(k, &e)| (e, graph.edge(e).direction_from(self.vertices[k])))
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<usize>, edges: Vec<usize>) -> Self {
        Path { vertices, edges }
    }
}
