//! Cycle removal, decomposition of acyclic flows into weighted simple paths,
//! loop erasure of traffic plans and the edge-load bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::boundary_of_flow;
use crate::model::{
    BoundaryMeasure, GeometricGraph, Instance, LagrangianCompetitor, Path, PlanPath,
};

/// Values below this magnitude are treated as zero after a subtraction.
pub const SNAP: f64 = 1e-12;
/// Tolerance of the decomposition identities.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DecompositionError {
    #[error("flow has a directed cycle through vertex {0}")]
    NotAcyclic(usize),
    #[error("flow has divergence {divergence} at vertex {vertex}, which carries no boundary atom")]
    StrayDivergence { vertex: usize, divergence: f64 },
    #[error("flow has {found} entries, graph has {expected} edges")]
    Shape { expected: usize, found: usize },
}

fn snap(x: f64) -> f64 {
    if x.abs() < SNAP {
        0.0
    } else {
        x
    }
}

/// Out-arcs of `v` in the support of `flow`, each edge oriented by the sign of its flow.
fn support_out<'a>(
    graph: &'a GeometricGraph,
    flow: &'a [f64],
    v: usize,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    graph.incident(v).iter().filter_map(move |&e| {
        let edge = graph.edge(e);
        let f = flow[e];
        if f > 0.0 && edge.u == v {
            Some((e, edge.v))
        } else if f < 0.0 && edge.v == v {
            Some((e, edge.u))
        } else {
            None
        }
    })
}

/// Edges of some directed cycle in the support, found by depth-first search
/// from the smallest vertex with ties broken by edge id.
fn find_cycle(graph: &GeometricGraph, flow: &[f64]) -> Option<Vec<usize>> {
    let n = graph.num_vertices();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        // stack of (vertex, outgoing arcs, cursor); edge_stack[k] enters stack[k + 1]
        let mut stack: Vec<(usize, Vec<(usize, usize)>, usize)> =
            vec![(root, support_out(graph, flow, root).collect(), 0)];
        let mut edge_stack: Vec<usize> = Vec::new();
        color[root] = 1;
        while let Some(top) = stack.last_mut() {
            if top.2 < top.1.len() {
                let (e, w) = top.1[top.2];
                top.2 += 1;
                match color[w] {
                    0 => {
                        color[w] = 1;
                        edge_stack.push(e);
                        stack.push((w, support_out(graph, flow, w).collect(), 0));
                    }
                    1 => {
                        let pos = stack
                            .iter()
                            .position(|s| s.0 == w)
                            .expect("gray vertex is on the stack");
                        let mut cycle: Vec<usize> = edge_stack[pos..].to_vec();
                        cycle.push(e);
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[top.0] = 2;
                stack.pop();
                edge_stack.pop();
            }
        }
    }
    None
}

/// Cancels directed cycles until the support is acyclic. The boundary is
/// unchanged and no edge grows or flips sign.
pub fn remove_cycles(graph: &GeometricGraph, flow: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = flow.iter().map(|&x| snap(x)).collect();
    while let Some(cycle) = find_cycle(graph, &out) {
        let bottleneck = cycle
            .iter()
            .map(|&e| out[e].abs())
            .fold(f64::INFINITY, f64::min);
        for &e in &cycle {
            let f = out[e];
            out[e] = snap(f - f.signum() * bottleneck);
            // an exact bottleneck edge must vanish even if roundoff says otherwise
            if f.abs() == bottleneck {
                out[e] = 0.0;
            }
        }
    }
    out
}

pub fn is_acyclic(graph: &GeometricGraph, flow: &[f64]) -> bool {
    find_cycle(graph, flow).is_none()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPath {
    #[serde(flatten)]
    pub path: Path,
    pub weight: f64,
}

/// Weighted simple paths whose superposition reproduces a flow.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathDecomposition {
    pub items: Vec<WeightedPath>,
}

/// Residuals of the three decomposition identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// max_e |sum_p w_p [p on e] - T_e|
    pub superposition: f64,
    /// |sum_p w_p L(p) - sum_e len(e) |T_e||
    pub mass: f64,
    /// |2 sum_p w_p - sum_v |dT(v)||
    pub boundary: f64,
    pub all_simple: bool,
}

impl IdentityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.all_simple && self.superposition <= tol && self.mass <= tol && self.boundary <= tol
    }
}

impl PathDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.items.iter().map(|p| p.weight).sum()
    }

    /// Signed edge flow of the weighted paths.
    pub fn superpose(&self, graph: &GeometricGraph) -> Vec<f64> {
        let mut flow = vec![0.0; graph.num_edges()];
        for item in &self.items {
            for (e, s) in item.path.signed_edges(graph) {
                flow[e] += s * item.weight;
            }
        }
        flow
    }

    pub fn identities(&self, graph: &GeometricGraph, flow: &[f64]) -> IdentityReport {
        let sup = self.superpose(graph);
        let superposition = sup
            .iter()
            .zip(flow)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let path_mass: f64 = self
            .items
            .iter()
            .map(|p| p.weight * p.path.length(graph))
            .sum();
        let flow_mass: f64 = graph
            .edges()
            .iter()
            .map(|e| e.length * flow[e.id].abs())
            .sum();
        let boundary_mass: f64 = boundary_of_flow(graph, flow).iter().map(|x| x.abs()).sum();
        IdentityReport {
            superposition,
            mass: (path_mass - flow_mass).abs(),
            boundary: (2.0 * self.total_weight() - boundary_mass).abs(),
            all_simple: self.items.iter().all(|p| p.path.is_simple()),
        }
    }
}

/// Peels an acyclic flow into weighted simple paths. Each path starts at the
/// smallest vertex with outflow and no inflow, follows the smallest-id support
/// edge and stops where no outflow remains; its weight is the bottleneck.
///
/// With `strict` set, any divergence at a vertex outside the support of that
/// measure is an error.
pub fn good_decomposition(
    graph: &GeometricGraph,
    flow: &[f64],
    strict: Option<&BoundaryMeasure>,
) -> Result<PathDecomposition, DecompositionError> {
    if flow.len() != graph.num_edges() {
        return Err(DecompositionError::Shape {
            expected: graph.num_edges(),
            found: flow.len(),
        });
    }
    if let Some(nu) = strict {
        let b = boundary_of_flow(graph, flow);
        if let Some(v) = (0..b.len()).find(|&v| b[v].abs() > IDENTITY_TOL && nu.mass(v) == 0.0) {
            return Err(DecompositionError::StrayDivergence {
                vertex: v,
                divergence: b[v],
            });
        }
    }
    let n = graph.num_vertices();
    let mut rest: Vec<f64> = flow.iter().map(|&x| snap(x)).collect();
    let mut items = Vec::new();
    let has_in = |rest: &[f64], v: usize| {
        graph.incident(v).iter().any(|&e| {
            let edge = graph.edge(e);
            (rest[e] > 0.0 && edge.v == v) || (rest[e] < 0.0 && edge.u == v)
        })
    };
    loop {
        let start =
            (0..n).find(|&v| support_out(graph, &rest, v).next().is_some() && !has_in(&rest, v));
        let Some(start) = start else {
            if let Some(v) = (0..n).find(|&v| support_out(graph, &rest, v).next().is_some()) {
                return Err(DecompositionError::NotAcyclic(v));
            }
            break;
        };
        let mut vertices = vec![start];
        let mut edges = Vec::new();
        let mut visited = vec![false; n];
        visited[start] = true;
        let mut at = start;
        while let Some((e, w)) = support_out(graph, &rest, at).next() {
            if visited[w] {
                return Err(DecompositionError::NotAcyclic(w));
            }
            visited[w] = true;
            edges.push(e);
            vertices.push(w);
            at = w;
        }
        let weight = edges
            .iter()
            .map(|&e| rest[e].abs())
            .fold(f64::INFINITY, f64::min);
        for &e in &edges {
            let f = rest[e];
            rest[e] = if f.abs() == weight {
                0.0
            } else {
                snap(f - f.signum() * weight)
            };
        }
        items.push(WeightedPath {
            path: Path::from_parts_unchecked(vertices, edges),
            weight,
        });
    }
    Ok(PathDecomposition { items })
}

/// Chronological loop erasure: whenever a vertex repeats, the segment since its
/// first visit is cut out.
pub fn loop_erase(path: &Path) -> Path {
    let mut vertices: Vec<usize> = Vec::with_capacity(path.vertices().len());
    let mut edges: Vec<usize> = Vec::with_capacity(path.edges().len());
    for (k, &v) in path.vertices().iter().enumerate() {
        if let Some(pos) = vertices.iter().position(|&w| w == v) {
            vertices.truncate(pos + 1);
            edges.truncate(pos);
        } else {
            if k > 0 {
                edges.push(path.edges()[k - 1]);
            }
            vertices.push(v);
        }
    }
    Path::from_parts_unchecked(vertices, edges)
}

/// Replaces every path of the plan by its loop erasure. Paths whose endpoints
/// coincide erase to a single point and are dropped.
pub fn loop_erase_plan(plan: &LagrangianCompetitor) -> LagrangianCompetitor {
    LagrangianCompetitor {
        plan: plan
            .plan
            .iter()
            .filter_map(|p| {
                let erased = loop_erase(&p.path);
                (erased.vertices().len() >= 2).then(|| PlanPath {
                    path: erased,
                    weight: p.weight,
                    sub_weights: p.sub_weights.clone(),
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub max_load: f64,
    pub beta: f64,
    pub holds: bool,
}

/// Checks `max_e |T_e| <= |nu|(X) / 2`.
pub fn density_bound_check(inst: &Instance, flow: &[f64]) -> DensityReport {
    let max_load = flow.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let beta = inst.beta();
    DensityReport {
        max_load,
        beta,
        holds: max_load <= beta + IDENTITY_TOL,
    }
}
