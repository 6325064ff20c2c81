//! Combinatorial data model of a metric graph: named vertices, oriented edges
//! with positive lengths, and an adjacency index.
//!
//! Orientation fixes, for every edge `e = vw`, the tail `v` (coordinate 0) and
//! the head `w` (coordinate `len`). The incidence sign is -1 at the tail, +1
//! at the head and 0 otherwise. Anti-parallel duplicates (`vw` and `wv` both
//! present) are rejected; parallel edges with the same orientation are fine.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Which end of an oriented edge a vertex sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointRole {
    Tail,
    Head,
}

impl EndpointRole {
    /// Incidence sign `n_v^e`: -1 for the tail, +1 for the head.
    pub fn sign(self) -> i32 {
        match self {
            EndpointRole::Tail => -1,
            EndpointRole::Head => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            EndpointRole::Tail => EndpointRole::Head,
            EndpointRole::Head => EndpointRole::Tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    DuplicateVertexId(String),
    UnknownVertex(String),
    SelfLoop { vertex: String },
    AntiParallelDuplicate { tail: String, head: String },
    NonPositiveLength { edge: usize, length: f64 },
    Disconnected,
    UnknownEdge(usize),
    UnknownVertexIndex(usize),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::DuplicateVertexId(v) => write!(f, "duplicate vertex id {v:?}"),
            GraphError::UnknownVertex(v) => write!(f, "unknown vertex id {v:?}"),
            GraphError::SelfLoop { vertex } => write!(f, "self-loop at vertex {vertex:?}"),
            GraphError::AntiParallelDuplicate { tail, head } => {
                write!(f, "edges {tail}->{head} and {head}->{tail} both present")
            }
            GraphError::NonPositiveLength { edge, length } => {
                write!(f, "edge #{edge} has non-positive length {length}")
            }
            GraphError::Disconnected => write!(f, "graph is not connected"),
            GraphError::UnknownEdge(e) => write!(f, "edge index {e} out of range"),
            GraphError::UnknownVertexIndex(v) => write!(f, "vertex index {v} out of range"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GraphError {}

#[derive(Debug, Clone)]
struct EdgeDef {
    tail: usize,
    head: usize,
    length: f64,
}

/// Validated metric graph. Immutable after construction; edge order defines
/// the state layout of every assembled system.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    vertex_ids: Vec<String>,
    edges: Vec<EdgeDef>,
    /// Per vertex: incident edges in edge order, with the endpoint role this
    /// vertex plays. A list, not a set, so parallel edges keep multiplicity.
    adjacency: Vec<Vec<(usize, EndpointRole)>>,
}

impl MetricGraph {
    /// Build and validate a metric graph from vertex ids and edge specs
    /// `(tail id, head id, length)`.
    pub fn build(
        vertex_ids: Vec<String>,
        edge_specs: &[(String, String, f64)],
    ) -> Result<Self, GraphError> {
        for (i, v) in vertex_ids.iter().enumerate() {
            if vertex_ids[..i].contains(v) {
                return Err(GraphError::DuplicateVertexId(v.clone()));
            }
        }
        let index_of = |id: &str| -> Result<usize, GraphError> {
            vertex_ids
                .iter()
                .position(|v| v == id)
                .ok_or_else(|| GraphError::UnknownVertex(id.into()))
        };

        let mut edges = Vec::with_capacity(edge_specs.len());
        for (i, (tail_id, head_id, length)) in edge_specs.iter().enumerate() {
            let tail = index_of(tail_id)?;
            let head = index_of(head_id)?;
            if tail == head {
                return Err(GraphError::SelfLoop {
                    vertex: tail_id.clone(),
                });
            }
            if !(*length > 0.0) {
                return Err(GraphError::NonPositiveLength {
                    edge: i,
                    length: *length,
                });
            }
            if edges
                .iter()
                .any(|e: &EdgeDef| e.tail == head && e.head == tail)
            {
                return Err(GraphError::AntiParallelDuplicate {
                    tail: tail_id.clone(),
                    head: head_id.clone(),
                });
            }
            edges.push(EdgeDef {
                tail,
                head,
                length: *length,
            });
        }

        let mut adjacency = alloc::vec![Vec::new(); vertex_ids.len()];
        for (e, def) in edges.iter().enumerate() {
            adjacency[def.tail].push((e, EndpointRole::Tail));
            adjacency[def.head].push((e, EndpointRole::Head));
        }

        let graph = MetricGraph {
            vertex_ids,
            edges,
            adjacency,
        };
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_ids.len();
        if n == 0 {
            return false;
        }
        let mut seen = alloc::vec![false; n];
        let mut stack = alloc::vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(e, role) in &self.adjacency[v] {
                let w = match role {
                    EndpointRole::Tail => self.edges[e].head,
                    EndpointRole::Head => self.edges[e].tail,
                };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertex_ids.iter().position(|v| v == id)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edges[e].length
    }

    pub fn edge_tail(&self, e: usize) -> usize {
        self.edges[e].tail
    }

    pub fn edge_head(&self, e: usize) -> usize {
        self.edges[e].head
    }

    /// Vertex index at the given end of edge `e`.
    pub fn edge_endpoint(&self, e: usize, role: EndpointRole) -> usize {
        match role {
            EndpointRole::Tail => self.edges[e].tail,
            EndpointRole::Head => self.edges[e].head,
        }
    }

    /// Incident edges of `v` (with the role `v` plays), in edge order.
    pub fn incident_edges(&self, v: usize) -> &[(usize, EndpointRole)] {
        &self.adjacency[v]
    }

    /// Incidence sign: -1 if `v` is the tail of `e`, +1 if head, 0 otherwise.
    pub fn incidence_sign(&self, v: usize, e: usize) -> Result<i32, GraphError> {
        if v >= self.num_vertices() {
            return Err(GraphError::UnknownVertexIndex(v));
        }
        let def = self.edges.get(e).ok_or(GraphError::UnknownEdge(e))?;
        Ok(if def.tail == v {
            -1
        } else if def.head == v {
            1
        } else {
            0
        })
    }

    /// Total metric length of the graph.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }
}

/// Convenience constructor used throughout the tests: the triangle with unit
/// edge lengths, `e1 = v1 v2`, `e2 = v2 v3`, `e3 = v3 v1`.
pub fn triangle() -> MetricGraph {
    MetricGraph::build(
        alloc::vec!["v1".into(), "v2".into(), "v3".into()],
        &[
            ("v1".into(), "v2".into(), 1.0),
            ("v2".into(), "v3".into(), 1.0),
            ("v3".into(), "v1".into(), 1.0),
        ],
    )
    .expect("triangle is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_builds_with_expected_signs() {
        let g = triangle();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.incidence_sign(0, 0).unwrap(), -1); // v1 tail of e1
        assert_eq!(g.incidence_sign(1, 0).unwrap(), 1); // v2 head of e1
        assert_eq!(g.incidence_sign(2, 0).unwrap(), 0); // v3 not on e1
    }

    #[test]
    fn single_edge_is_valid() {
        let g = MetricGraph::build(
            alloc::vec!["a".into(), "b".into()],
            &[("a".into(), "b".into(), 1.0)],
        )
        .unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edge_length(0), 1.0);
    }

    #[test]
    fn anti_parallel_duplicate_rejected() {
        let err = MetricGraph::build(
            alloc::vec!["a".into(), "b".into()],
            &[
                ("a".into(), "b".into(), 1.0),
                ("b".into(), "a".into(), 1.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::AntiParallelDuplicate { .. }));
    }

    #[test]
    fn parallel_same_orientation_allowed() {
        let g = MetricGraph::build(
            alloc::vec!["a".into(), "b".into()],
            &[
                ("a".into(), "b".into(), 1.0),
                ("a".into(), "b".into(), 2.0),
            ],
        )
        .unwrap();
        assert_eq!(g.incident_edges(0).len(), 2);
    }

    #[test]
    fn self_loop_rejected() {
        let err = MetricGraph::build(
            alloc::vec!["a".into(), "b".into()],
            &[
                ("a".into(), "a".into(), 1.0),
                ("a".into(), "b".into(), 1.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop { .. }));
    }

    #[test]
    fn disconnected_rejected() {
        let err = MetricGraph::build(
            alloc::vec!["a".into(), "b".into(), "c".into(), "d".into()],
            &[
                ("a".into(), "b".into(), 1.0),
                ("c".into(), "d".into(), 1.0),
            ],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::Disconnected);
    }

    #[test]
    fn nonpositive_length_rejected() {
        let err = MetricGraph::build(
            alloc::vec!["a".into(), "b".into()],
            &[("a".into(), "b".into(), 0.0)],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveLength { .. }));
    }

    #[test]
    fn unknown_vertex_rejected() {
        let err = MetricGraph::build(
            alloc::vec!["a".into(), "b".into()],
            &[("a".into(), "z".into(), 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::UnknownVertex(_)));
    }

    #[test]
    fn signs_sum_to_two_in_absolute_value() {
        let g = triangle();
        for e in 0..g.num_edges() {
            let total: i32 = (0..g.num_vertices())
                .map(|v| g.incidence_sign(v, e).unwrap().abs())
                .sum();
            assert_eq!(total, 2);
        }
    }

    #[test]
    fn resummation_identity() {
        // sum_v sum_{e in E(v)} phi == sum_e sum_{v in V(e)} phi
        let g = triangle();
        let phi = |v: usize, e: usize| (v as f64 + 1.0) * 10.0 + e as f64;
        let lhs: f64 = (0..g.num_vertices())
            .flat_map(|v| g.incident_edges(v).iter().map(move |&(e, _)| phi(v, e)))
            .sum();
        let rhs: f64 = (0..g.num_edges())
            .map(|e| phi(g.edge_tail(e), e) + phi(g.edge_head(e), e))
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
