//! Candidate routes for the Lagrangian solver: Yen's k shortest simple paths
//! and exhaustive simple-path enumeration for the oracle.

use std::collections::{BTreeSet, BinaryHeap, HashSet};

use super::Key;
use crate::energy::path_efficiency;
use crate::model::{Efficiencies, GeometricGraph, Instance, ModelError, Path};

struct Blocked<'a> {
    edge_ok: &'a dyn Fn(usize) -> bool,
    vertex_ok: &'a dyn Fn(usize) -> bool,
    edges: &'a HashSet<usize>,
    vertices: &'a HashSet<usize>,
}

impl Blocked<'_> {
    fn vertex(&self, v: usize) -> bool {
        !(self.vertex_ok)(v) || self.vertices.contains(&v)
    }

    fn edge(&self, e: usize) -> bool {
        !(self.edge_ok)(e) || self.edges.contains(&e)
    }
}

/// Shortest path by edge length; ties resolved by heap order on vertex id.
fn dijkstra(
    graph: &GeometricGraph,
    s: usize,
    t: usize,
    blocked: &Blocked,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if blocked.vertex(s) || blocked.vertex(t) {
        return None;
    }
    let n = graph.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(std::cmp::Reverse((Key(0.0), s)));
    while let Some(std::cmp::Reverse((Key(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == t {
            break;
        }
        for &e in graph.incident(u) {
            if blocked.edge(e) {
                continue;
            }
            let w = graph.edge(e).other(u).expect("incident edge");
            if blocked.vertex(w) {
                continue;
            }
            let nd = d + graph.edge(e).length;
            if nd < dist[w] {
                dist[w] = nd;
                parent[w] = e;
                heap.push(std::cmp::Reverse((Key(nd), w)));
            }
        }
    }
    if !dist[t].is_finite() {
        return None;
    }
    let mut vertices = vec![t];
    let mut edges = Vec::new();
    let mut at = t;
    while at != s {
        let e = parent[at];
        edges.push(e);
        at = graph.edge(e).other(at).expect("parent edge");
        vertices.push(at);
    }
    vertices.reverse();
    edges.reverse();
    Some((vertices, edges))
}

/// Up to `k` shortest simple `s -> t` paths (Yen) inside the subgraph allowed
/// by the two predicates, in nondecreasing length.
pub fn k_shortest_paths(
    graph: &GeometricGraph,
    s: usize,
    t: usize,
    k: usize,
    edge_ok: &dyn Fn(usize) -> bool,
    vertex_ok: &dyn Fn(usize) -> bool,
) -> Vec<Path> {
    if k == 0 || s == t {
        return Vec::new();
    }
    let none_e = HashSet::new();
    let none_v = HashSet::new();
    let open = Blocked {
        edge_ok,
        vertex_ok,
        edges: &none_e,
        vertices: &none_v,
    };
    let Some(first) = dijkstra(graph, s, t, &open) else {
        return Vec::new();
    };
    let length = |edges: &[usize]| -> f64 { edges.iter().map(|&e| graph.edge(e).length).sum() };
    let mut found: Vec<(Vec<usize>, Vec<usize>)> = vec![first];
    let mut candidates: BTreeSet<(Key, Vec<usize>, Vec<usize>)> = BTreeSet::new();
    while found.len() < k {
        let (prev_v, prev_e) = found.last().expect("nonempty").clone();
        for idx in 0..prev_e.len() {
            let spur = prev_v[idx];
            let root_v = &prev_v[..=idx];
            let root_e = &prev_e[..idx];
            let mut blocked_e = HashSet::new();
            for (pv, pe) in &found {
                if pv.len() > idx + 1 && &pv[..=idx] == root_v && &pe[..idx] == root_e {
                    blocked_e.insert(pe[idx]);
                }
            }
            let blocked_v: HashSet<usize> = root_v[..idx].iter().copied().collect();
            let b = Blocked {
                edge_ok,
                vertex_ok,
                edges: &blocked_e,
                vertices: &blocked_v,
            };
            if let Some((sv, se)) = dijkstra(graph, spur, t, &b) {
                let mut vertices = root_v.to_vec();
                vertices.extend_from_slice(&sv[1..]);
                let mut edges = root_e.to_vec();
                edges.extend(se);
                if !found.iter().any(|(_, fe)| *fe == edges) {
                    candidates.insert((Key(length(&edges)), vertices, edges));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, v, e)) => found.push((v, e)),
            None => break,
        }
    }
    found
        .into_iter()
        .map(|(v, e)| Path::from_parts_unchecked(v, e))
        .collect()
}

/// All simple `s -> t` paths inside the allowed subgraph, or `None` once more
/// than `limit` exist.
pub fn simple_paths(
    graph: &GeometricGraph,
    s: usize,
    t: usize,
    edge_ok: &dyn Fn(usize) -> bool,
    vertex_ok: &dyn Fn(usize) -> bool,
    limit: usize,
) -> Option<Vec<Path>> {
    fn walk(
        graph: &GeometricGraph,
        t: usize,
        edge_ok: &dyn Fn(usize) -> bool,
        vertex_ok: &dyn Fn(usize) -> bool,
        limit: usize,
        vertices: &mut Vec<usize>,
        edges: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Path>,
    ) -> bool {
        let u = *vertices.last().expect("nonempty");
        if u == t {
            out.push(Path::from_parts_unchecked(vertices.clone(), edges.clone()));
            return out.len() <= limit;
        }
        for &e in graph.incident(u) {
            if !edge_ok(e) {
                continue;
            }
            let w = graph.edge(e).other(u).expect("incident edge");
            if on_path[w] || !vertex_ok(w) {
                continue;
            }
            on_path[w] = true;
            vertices.push(w);
            edges.push(e);
            let ok = walk(
                graph, t, edge_ok, vertex_ok, limit, vertices, edges, on_path, out,
            );
            edges.pop();
            vertices.pop();
            on_path[w] = false;
            if !ok {
                return false;
            }
        }
        true
    }

    let mut out = Vec::new();
    if s == t || !vertex_ok(s) || !vertex_ok(t) {
        return Some(out);
    }
    let mut on_path = vec![false; graph.num_vertices()];
    on_path[s] = true;
    let ok = walk(
        graph,
        t,
        edge_ok,
        vertex_ok,
        limit,
        &mut vec![s],
        &mut Vec::new(),
        &mut on_path,
        &mut out,
    );
    ok.then_some(out)
}

pub(crate) fn usable_edge(graph: &GeometricGraph, eff: &Efficiencies, e: usize) -> bool {
    let edge = graph.edge(e);
    eff.edge[e] > 0.0 && eff.vertex[edge.u] > 0.0 && eff.vertex[edge.v] > 0.0
}

/// Lagrangian path dictionary: for every scenario and source-target pair the
/// `k` shortest simple paths through undamaged ground, then the `k` shortest
/// ignoring damage, kept only if some scenario can use them. First occurrence
/// order, duplicates dropped.
pub fn path_dictionary(inst: &Instance, k: usize) -> Result<Vec<Path>, ModelError> {
    let g = &inst.graph;
    let effs = inst
        .scenarios
        .iter()
        .map(|s| s.efficiencies(g))
        .collect::<Result<Vec<_>, _>>()?;
    let sources: Vec<usize> = inst.boundary.sources().collect();
    let targets: Vec<usize> = inst.boundary.targets().collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |p: Path, out: &mut Vec<Path>| {
        if seen.insert(p.edges().to_vec()) {
            out.push(p);
        }
    };
    for eff in &effs {
        let edge_ok = |e: usize| usable_edge(g, eff, e);
        let vertex_ok = |v: usize| eff.vertex[v] > 0.0;
        for &s in &sources {
            for &t in &targets {
                for p in k_shortest_paths(g, s, t, k, &edge_ok, &vertex_ok) {
                    push(p, &mut out);
                }
            }
        }
    }
    for &s in &sources {
        for &t in &targets {
            for p in k_shortest_paths(g, s, t, k, &|_| true, &|_| true) {
                if effs.iter().any(|eff| path_efficiency(&p, eff) > 0.0) {
                    push(p, &mut out);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Square 0-1-2-3 with diagonal 0-2 and a parallel copy of edge 0-1.
    fn square() -> GeometricGraph {
        GeometricGraph::new(
            2,
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
            vec![
                (0, 1, None),
                (1, 2, None),
                (2, 3, None),
                (3, 0, None),
                (0, 2, None),
                (0, 1, Some(1.5)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn yen_orders_by_length() {
        let g = square();
        let paths = k_shortest_paths(&g, 0, 2, 10, &|_| true, &|_| true);
        let lengths: Vec<f64> = paths.iter().map(|p| p.length(&g)).collect();
        assert_eq!(paths.len(), 4);
        assert!((lengths[0] - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(&lengths[1..], &[2.0, 2.0, 2.5]);
        assert!(paths.iter().all(Path::is_simple));
        assert_eq!(paths[3].edges(), &[5, 1]);
    }

    #[test]
    fn yen_respects_the_subgraph() {
        let g = square();
        let paths = k_shortest_paths(&g, 0, 2, 10, &|e| e != 4, &|v| v != 3);
        let edges: Vec<&[usize]> = paths.iter().map(|p| p.edges()).collect();
        assert_eq!(edges, vec![&[0, 1][..], &[5, 1][..]]);
    }

    #[test]
    fn enumeration_agrees_with_yen() {
        let g = square();
        let mut all = simple_paths(&g, 0, 2, &|_| true, &|_| true, 64).unwrap();
        let mut yen = k_shortest_paths(&g, 0, 2, 64, &|_| true, &|_| true);
        all.sort();
        yen.sort();
        assert_eq!(all, yen);
        assert!(simple_paths(&g, 0, 2, &|_| true, &|_| true, 3).is_none());
    }
}
