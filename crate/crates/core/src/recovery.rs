//! Per-scenario recovery: the flow that maximizes the pay-off inside given
//! capacities, solved as a min-cost flow with negative costs on the arcs that
//! inject at sources and extract at targets.

use serde::Serialize;
use thiserror::Error;

use crate::decomposition::remove_cycles;
use crate::energy::eulerian_scenario_payoff;
use crate::model::{Instance, ModelError};

const EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("malformed flow network: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cap: f64,
    pub cost: f64,
}

/// Which instance edge an arc carries and in which direction (+1 = reference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcOrigin {
    pub edge: usize,
    pub sign: f64,
}

/// Instance vertices plus a super-source and a super-sink.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowNetwork {
    pub num_nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<Arc>,
    /// `Some` for arcs that come from instance edges.
    pub origins: Vec<Option<ArcOrigin>>,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Self {
        Self {
            num_nodes,
            source,
            sink,
            arcs: Vec::new(),
            origins: Vec::new(),
        }
    }

    pub fn add_arc(
        &mut self,
        from: usize,
        to: usize,
        cap: f64,
        cost: f64,
        origin: Option<ArcOrigin>,
    ) {
        self.arcs.push(Arc {
            from,
            to,
            cap,
            cost,
        });
        self.origins.push(origin);
    }

    fn check(&self) -> Result<(), RecoveryError> {
        if self.source >= self.num_nodes || self.sink >= self.num_nodes || self.source == self.sink
        {
            return Err(RecoveryError::Malformed("bad source or sink".into()));
        }
        for (k, a) in self.arcs.iter().enumerate() {
            if a.from >= self.num_nodes || a.to >= self.num_nodes {
                return Err(RecoveryError::Malformed(format!(
                    "arc {k} has an unknown endpoint"
                )));
            }
            if !(a.cap >= 0.0) || !a.cap.is_finite() || !a.cost.is_finite() {
                return Err(RecoveryError::Malformed(format!(
                    "arc {k} has invalid capacity or cost"
                )));
            }
            let terminal = a.from == self.source || a.to == self.sink;
            if a.cost < 0.0 && !terminal {
                return Err(RecoveryError::Malformed(format!(
                    "arc {k} has negative cost away from the terminals"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McfResult {
    /// Flow on every arc of the network, in arc order.
    pub flow: Vec<f64>,
    pub cost: f64,
}

/// Residual graph: arc `2k` is the forward copy of network arc `k`, `2k + 1` its reverse.
struct Residual {
    to: Vec<usize>,
    cap: Vec<f64>,
    cost: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn build(net: &FlowNetwork) -> Self {
        let m = net.arcs.len();
        let mut r = Residual {
            to: Vec::with_capacity(2 * m),
            cap: Vec::with_capacity(2 * m),
            cost: Vec::with_capacity(2 * m),
            adj: vec![Vec::new(); net.num_nodes],
        };
        for a in &net.arcs {
            let k = r.to.len();
            r.to.extend([a.to, a.from]);
            r.cap.extend([a.cap, 0.0]);
            r.cost.extend([a.cost, -a.cost]);
            r.adj[a.from].push(k);
            r.adj[a.to].push(k + 1);
        }
        r
    }

    fn tail_of(&self, k: usize) -> usize {
        self.to[k ^ 1]
    }
}

/// Minimum-cost flow of any value from `source` to `sink` by successive
/// shortest paths with node potentials. Augmentation stops as soon as the
/// cheapest residual path has nonnegative cost.
pub fn min_cost_flow(net: &FlowNetwork) -> Result<McfResult, RecoveryError> {
    net.check()?;
    let n = net.num_nodes;
    let mut r = Residual::build(net);

    // initial potentials by Bellman-Ford from the source
    let mut pot = vec![f64::INFINITY; n];
    pot[net.source] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for u in 0..n {
            if !pot[u].is_finite() {
                continue;
            }
            for &k in &r.adj[u] {
                if r.cap[k] > EPS && pot[u] + r.cost[k] < pot[r.to[k]] - EPS {
                    pot[r.to[k]] = pot[u] + r.cost[k];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut total_cost = 0.0;
    loop {
        // Dijkstra on reduced costs; O(n^2) selection keeps ties on the smallest node id
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[net.source] = 0.0;
        loop {
            let mut best = usize::MAX;
            for v in 0..n {
                if !done[v] && dist[v].is_finite() && (best == usize::MAX || dist[v] < dist[best]) {
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            let u = best;
            done[u] = true;
            for &k in &r.adj[u] {
                let w = r.to[k];
                if r.cap[k] <= EPS || done[w] || !pot[w].is_finite() {
                    continue;
                }
                let reduced = (r.cost[k] + pot[u] - pot[w]).max(0.0);
                if dist[u] + reduced < dist[w] {
                    dist[w] = dist[u] + reduced;
                    parent[w] = k;
                }
            }
        }
        if !dist[net.sink].is_finite() {
            break;
        }
        let path_cost = dist[net.sink] + pot[net.sink] - pot[net.source];
        if path_cost >= -EPS {
            break;
        }
        for v in 0..n {
            if dist[v].is_finite() {
                pot[v] += dist[v];
            }
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = net.sink;
        while v != net.source {
            let k = parent[v];
            bottleneck = bottleneck.min(r.cap[k]);
            v = r.tail_of(k);
        }
        let mut v = net.sink;
        let mut real_cost = 0.0;
        while v != net.source {
            let k = parent[v];
            r.cap[k] -= bottleneck;
            if r.cap[k] < EPS {
                r.cap[k] = 0.0;
            }
            r.cap[k ^ 1] += bottleneck;
            real_cost += r.cost[k];
            v = r.tail_of(k);
        }
        total_cost += real_cost * bottleneck;
    }

    let flow: Vec<f64> = (0..net.arcs.len()).map(|k| r.cap[2 * k + 1]).collect();
    debug_assert!(
        !has_negative_cycle(&r, n),
        "residual network admits a negative cycle after min-cost flow"
    );
    Ok(McfResult {
        flow,
        cost: total_cost,
    })
}

/// Bellman-Ford negative-cycle detection on the residual graph.
fn has_negative_cycle(r: &Residual, n: usize) -> bool {
    let mut d = vec![0.0; n];
    for round in 0..=n {
        let mut changed = false;
        for u in 0..n {
            for &k in &r.adj[u] {
                if r.cap[k] > EPS && d[u] + r.cost[k] < d[r.to[k]] - 1e-9 {
                    d[r.to[k]] = d[u] + r.cost[k];
                    changed = true;
                }
            }
        }
        if !changed {
            return false;
        }
        if round == n {
            return true;
        }
    }
    false
}

/// JSON dump of a network and the residual capacities left by `result`.
pub fn residual_json(net: &FlowNetwork, result: &McfResult) -> String {
    #[derive(Serialize)]
    struct Entry<'a> {
        arc: &'a Arc,
        flow: f64,
        residual_forward: f64,
        residual_backward: f64,
    }
    let entries: Vec<Entry> = net
        .arcs
        .iter()
        .zip(&result.flow)
        .map(|(arc, &flow)| Entry {
            arc,
            flow,
            residual_forward: arc.cap - flow,
            residual_backward: flow,
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("residual dump cannot fail")
}

/// Builds the recovery network of one scenario. `orientation[e]` restricts
/// edge `e` to one direction (+1 reference, -1 reverse, 0 both).
pub fn build_network(
    inst: &Instance,
    theta: &[f64],
    scenario: usize,
    orientation: Option<&[i8]>,
) -> Result<FlowNetwork, RecoveryError> {
    let g = &inst.graph;
    if theta.len() != g.num_edges() {
        return Err(ModelError::Shape {
            field: "theta".into(),
            expected: g.num_edges(),
            found: theta.len(),
        }
        .into());
    }
    let mask = inst.scenarios[scenario].mask()?;
    let n = g.num_vertices();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, s, t);
    for e in g.edges() {
        if !mask[e.id] || theta[e.id] <= 0.0 {
            continue;
        }
        let sigma = orientation.map_or(0, |o| o[e.id]);
        if sigma >= 0 {
            net.add_arc(
                e.u,
                e.v,
                theta[e.id],
                0.0,
                Some(ArcOrigin {
                    edge: e.id,
                    sign: 1.0,
                }),
            );
        }
        if sigma <= 0 {
            net.add_arc(
                e.v,
                e.u,
                theta[e.id],
                0.0,
                Some(ArcOrigin {
                    edge: e.id,
                    sign: -1.0,
                }),
            );
        }
    }
    for u in inst.boundary.sources() {
        net.add_arc(
            s,
            u,
            inst.boundary.source_mass(u),
            -inst.payoff_at(scenario, u),
            None,
        );
    }
    for v in inst.boundary.targets() {
        net.add_arc(
            v,
            t,
            inst.boundary.target_mass(v),
            -inst.payoff_at(scenario, v),
            None,
        );
    }
    Ok(net)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryFlow {
    /// Signed flow per instance edge, cycle-free.
    pub flow: Vec<f64>,
    /// `a_i * sum_v h(i, v) |dT(v)|`.
    pub payoff: f64,
}

/// The pay-off maximizing recovery flow of `scenario` inside capacities `theta`.
pub fn max_payoff_flow(
    inst: &Instance,
    theta: &[f64],
    scenario: usize,
    orientation: Option<&[i8]>,
) -> Result<RecoveryFlow, RecoveryError> {
    let net = build_network(inst, theta, scenario, orientation)?;
    let result = min_cost_flow(&net)?;
    let mut flow = vec![0.0; inst.graph.num_edges()];
    for (origin, f) in net.origins.iter().zip(&result.flow) {
        if let Some(o) = origin {
            flow[o.edge] += o.sign * f;
        }
    }
    let flow = remove_cycles(&inst.graph, &flow);
    let payoff = eulerian_scenario_payoff(inst, scenario, &flow);
    Ok(RecoveryFlow { flow, payoff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryMeasure, CostSpec, DamageScenario, GeometricGraph, PayoffSpec};

    fn segment(mask: bool) -> Instance {
        let g = GeometricGraph::new(1, vec![vec![0.0], vec![1.0]], vec![(0, 1, None)]).unwrap();
        Instance::new(
            g,
            BoundaryMeasure::new(vec![-1.0, 1.0]),
            CostSpec::sqrt(),
            vec![DamageScenario::with_mask(0, 1.0, vec![mask])],
            PayoffSpec::Constant { value: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn single_edge_saturates() {
        let inst = segment(true);
        let net = build_network(&inst, &[1.0], 0, None).unwrap();
        let r = min_cost_flow(&net).unwrap();
        assert_eq!(r.cost, -2.0);
        let rec = max_payoff_flow(&inst, &[1.0], 0, None).unwrap();
        assert_eq!(rec.flow, vec![1.0]);
        assert_eq!(rec.payoff, 2.0);
    }

    #[test]
    fn capacity_bounds_the_flow() {
        let inst = segment(true);
        let net = build_network(&inst, &[0.4], 0, None).unwrap();
        let r = min_cost_flow(&net).unwrap();
        assert!((r.cost + 0.8).abs() < 1e-15);
        assert_eq!(
            max_payoff_flow(&inst, &[0.4], 0, None).unwrap().flow,
            vec![0.4]
        );
    }

    #[test]
    fn masked_network_is_empty() {
        let inst = segment(false);
        let rec = max_payoff_flow(&inst, &[1.0], 0, None).unwrap();
        assert_eq!(rec.flow, vec![0.0]);
        assert_eq!(rec.payoff, 0.0);
    }

    #[test]
    fn orientation_blocks_reverse_use() {
        let inst = segment(true);
        let rec = max_payoff_flow(&inst, &[1.0], 0, Some(&[-1])).unwrap();
        assert_eq!(rec.flow, vec![0.0]);
    }

    #[test]
    fn prefers_the_richer_target() {
        // source 0 (mass 1) with routes to targets 1 (h = 3) and 2 (h = 1);
        // the two-variable LP max 4x + 2y, x + y <= 1, x, y in [0, 1] has its
        // optimum at the vertex (1, 0)
        let g = GeometricGraph::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, -1.0]],
            vec![(0, 1, None), (0, 2, None)],
        )
        .unwrap();
        let inst = Instance::new(
            g,
            BoundaryMeasure::new(vec![-1.0, 1.0, 1.0]),
            CostSpec::sqrt(),
            vec![DamageScenario::with_mask(0, 1.0, vec![true, true])],
            PayoffSpec::Table {
                values: vec![vec![0.0, 3.0, 1.0]],
            },
        )
        .unwrap();
        let rec = max_payoff_flow(&inst, &[1.0, 1.0], 0, None).unwrap();
        assert_eq!(rec.flow, vec![1.0, 0.0]);
        assert_eq!(rec.payoff, 3.0);
    }

    #[test]
    fn rejects_malformed_networks() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_arc(0, 5, 1.0, 0.0, None);
        assert!(min_cost_flow(&net).is_err());
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_arc(1, 1, 1.0, -1.0, None);
        assert!(min_cost_flow(&net).is_err());
    }

    #[test]
    fn missing_mask_is_an_error() {
        let g = GeometricGraph::new(1, vec![vec![0.0], vec![1.0]], vec![(0, 1, None)]).unwrap();
        let inst = Instance::new(
            g,
            BoundaryMeasure::new(vec![-1.0, 1.0]),
            CostSpec::sqrt(),
            vec![DamageScenario::with_efficiencies(
                0,
                1.0,
                vec![1.0, 1.0],
                None,
            )],
            PayoffSpec::Constant { value: 1.0 },
        )
        .unwrap();
        assert!(max_payoff_flow(&inst, &[1.0], 0, None).is_err());
    }

    #[test]
    fn residual_dump_is_json() {
        let inst = segment(true);
        let net = build_network(&inst, &[1.0], 0, None).unwrap();
        let r = min_cost_flow(&net).unwrap();
        let v: serde_json::Value = serde_json::from_str(&residual_json(&net, &r)).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 4);
    }
}
